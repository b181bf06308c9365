//! Parsing, serializing and diagnosing the route network text format.

use pearl_sim::formats::{parse_mission, parse_route_network, serialize_route_network};

const NETWORK: &str = "\
# two lanes joined end to end
segment 1
lane 1.1 width 3.5 speed 13.9
wp a 0 0
wp b 120 0
lane 1.2 width 3.25 speed 8
wp c 120 0
wp d 120 80
end
checkpoint corner b
checkpoint top d
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_route_network(NETWORK)?;
    for lane in net.lanes() {
        println!("lane {} {:.1} m at {} m/s", lane.id, lane.length(), lane.speed_limit);
    }
    let text = serialize_route_network(&net);
    println!("canonical form:\n{text}");
    assert_eq!(parse_route_network(&text)?, net);

    for broken in [
        "segment 1\nlane 1.1 width 3.5 speed 10\nwp a 0 0\nwp b 1 zero\nend\n",
        "segment 1\nlane 1.1 width 3.5 speed 10\nwp a 0 0\nend\n",
        "segment 1\nlane 1.1 width 3.5 speed 10\nwp a 0 0\nwp b 5 0\nend\ncheckpoint x q\n",
    ] {
        println!("rejected: {}", parse_route_network(broken).unwrap_err());
    }
    println!("rejected: {}", parse_mission(r#"{"checkpoints": ["a"], "speed_cap": "fast"}"#).unwrap_err());
    Ok(())
}
