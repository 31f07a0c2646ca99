use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::Message;

use flappy::protocol::{ErrorReply, TelemetryFrame};
use flappy::server::{serve, ServeOptions};
use flappy::session::Session;
use flappy_core::control::ControlGains;
use flappy_core::dynamics::VehicleParams;
use flappy_core::wing::{ThrustDataset, WingSpec};

struct Running {
    addr: std::net::SocketAddr,
    stop: oneshot::Sender<()>,
    task: JoinHandle<anyhow::Result<Session>>,
}

async fn start(record: Option<std::path::PathBuf>) -> Running {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let session = Session::new(
        VehicleParams::default(),
        ControlGains::default(),
        WingSpec::optimal(),
        ThrustDataset::bundled(),
    );
    let session = if record.is_some() {
        session.record()
    } else {
        session
    };
    let (stop, rx) = oneshot::channel();
    let task = tokio::spawn(serve(listener, session, ServeOptions { record }, async {
        let _ = rx.await;
    }));
    Running { addr, stop, task }
}

async fn next_line(
    lines: &mut tokio::io::Lines<BufReader<tokio::net::tcp::OwnedReadHalf>>,
) -> String {
    tokio::time::timeout(Duration::from_secs(5), lines.next_line())
        .await
        .expect("no data within 5 s")
        .unwrap()
        .expect("connection closed")
}

#[tokio::test(flavor = "multi_thread")]
async fn tcp_commands_and_telemetry() {
    let srv = start(None).await;
    let stream = TcpStream::connect(srv.addr).await.unwrap();
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();

    write
        .write_all(b"{\"kind\":\"warp\",\"seq\":1}\n")
        .await
        .unwrap();
    write
        .write_all(b"{\"kind\":\"set_throttle\",\"value\":1.0,\"seq\":2}\n")
        .await
        .unwrap();

    let mut frames = Vec::new();
    let mut errors = Vec::new();
    while frames.len() < 20 {
        let line = next_line(&mut lines).await;
        if let Ok(f) = serde_json::from_str::<TelemetryFrame>(&line) {
            frames.push(f);
        } else {
            errors.push(serde_json::from_str::<ErrorReply>(&line).unwrap());
        }
    }
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].seq, Some(1));
    assert!(frames.windows(2).all(|w| w[1].t_s > w[0].t_s));
    let last = frames.last().unwrap();
    assert!(last.u > frames[0].u && last.u > 0.0, "u did not rise");
    assert!(last.left_wing.enabled);

    srv.stop.send(()).unwrap();
    srv.task.await.unwrap().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn clients_see_identical_frames() {
    let srv = start(None).await;
    let mut readers = Vec::new();
    for _ in 0..2 {
        let (read, write) = TcpStream::connect(srv.addr).await.unwrap().into_split();
        readers.push((BufReader::new(read).lines(), write));
    }
    let mut seqs = Vec::new();
    for (lines, _) in readers.iter_mut() {
        let mut got = Vec::new();
        for _ in 0..15 {
            got.push(next_line(lines).await);
        }
        seqs.push(got);
    }
    // both joined within a frame or two of each other; compare the overlap
    let t = |l: &String| serde_json::from_str::<TelemetryFrame>(l).unwrap().t_s;
    let start = t(&seqs[0][0]).max(t(&seqs[1][0]));
    let a: Vec<_> = seqs[0].iter().filter(|l| t(l) >= start).take(10).collect();
    let b: Vec<_> = seqs[1].iter().filter(|l| t(l) >= start).take(10).collect();
    assert_eq!(a.len(), 10);
    assert_eq!(a, b);

    srv.stop.send(()).unwrap();
    srv.task.await.unwrap().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn websocket_endpoint() {
    let srv = start(None).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/", srv.addr))
        .await
        .unwrap();
    ws.send(Message::Text(
        r#"{"kind":"set_tail_mode","value":"sideways","seq":4}"#.into(),
    ))
    .await
    .unwrap();
    ws.send(Message::Text(
        r#"{"kind":"set_yaw","value":1,"seq":5}"#.into(),
    ))
    .await
    .unwrap();
    let mut frames = Vec::new();
    let mut error = None;
    while frames.len() < 10 {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("no websocket data")
            .unwrap()
            .unwrap();
        let Message::Text(text) = msg else { continue };
        match serde_json::from_str::<TelemetryFrame>(&text) {
            Ok(f) => frames.push(f),
            Err(_) => error = Some(serde_json::from_str::<ErrorReply>(&text).unwrap()),
        }
    }
    assert_eq!(error.unwrap().seq, Some(4));
    let last = frames.last().unwrap();
    assert!(last.r > 0.0, "yaw right should turn right");
    assert!(last.left_wing.enabled && !last.right_wing.enabled);
    ws.close(None).await.unwrap();

    srv.stop.send(()).unwrap();
    srv.task.await.unwrap().unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn headless_run_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let srv = start(Some(path.clone())).await;
    tokio::time::sleep(Duration::from_millis(300)).await;
    srv.stop.send(()).unwrap();
    let session = srv.task.await.unwrap().unwrap();
    assert!(
        session.state().t_s > 0.1,
        "loop did not advance without clients"
    );
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("t,x,y,z,psi,theta,u,w,r,q,battery_j\n"));
    assert!(text.lines().count() > 5);
}
