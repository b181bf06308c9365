//! Serves the urban scenario, then drives it from an in-process client:
//! take over the truck, accelerate it, pause and resume.
//!
//! With `--listen PORT` the server keeps running for external clients.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use pearl_sim::formats::load_scenario;
use pearl_sim::reasoner::BaselineReasoner;
use pearl_sim::server::{serve, AttachPayload, Envelope, Inbound, Session, SteerPayload, TimeScalePayload, SESSION_DT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/urban.json"))?;
    let session = Session::new(&bundle, Some(Box::new(BaselineReasoner::default())), Vec::new(), SESSION_DT)?;
    let args: Vec<String> = std::env::args().collect();
    if let Some(port) = args.iter().position(|a| a == "--listen").and_then(|i| args.get(i + 1)) {
        let server = serve(session, ("127.0.0.1", port.parse::<u16>()?))?;
        println!("listening on {}", server.local_addr());
        server.wait();
        return Ok(());
    }

    let server = serve(session, "127.0.0.1:0")?;
    let stream = TcpStream::connect(server.local_addr())?;
    let mut out = stream.try_clone()?;
    let mut lines = BufReader::new(stream).lines();
    let mut send = |seq: u64, msg: Inbound| -> std::io::Result<()> {
        writeln!(out, "{}", msg.to_envelope(seq).to_line())
    };

    println!("{}", lines.next().expect("hello")?);
    send(1, Inbound::Subscribe)?;
    send(2, Inbound::AttachSteering(AttachPayload { object_id: "truck".into() }))?;
    send(3, Inbound::Steer(SteerPayload { accel: 1.5, yaw_rate: 0.0 }))?;

    let mut snapshots = 0;
    while snapshots < 30 {
        let env: Envelope = serde_json::from_str(&lines.next().expect("server open")?)?;
        if env.kind != "snapshot" {
            println!("{} {}", env.kind, env.payload);
            continue;
        }
        snapshots += 1;
        if snapshots % 10 == 0 {
            let truck = env.payload["objects"].as_array().and_then(|objs| objs.iter().find(|o| o["id"] == "truck"));
            println!("clock {:.2} truck speed {}", env.payload["clock"], truck.map_or(0.0, |t| t["speed"].as_f64().unwrap_or(0.0)));
        }
        if snapshots == 20 {
            send(4, Inbound::SetTimeScale(TimeScalePayload { factor: 0.0 }))?;
        }
        if snapshots == 25 {
            send(5, Inbound::Resume(Default::default()))?;
        }
    }
    server.shutdown();
    Ok(())
}
