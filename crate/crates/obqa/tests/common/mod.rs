#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Receiver};
use std::thread;
use std::time::Duration;

use obqa::artifacts::save_checkpoint;
use obqa::pipeline::PipelineConfig;
use obqa::synth_io::{write_fixture, FixturePaths};
use obqa_core::extractor::{train, TrainConfig};
use obqa_core::synth::{synth_generate, SynthFixture};
use obqa_core::{make_training_windows, EncoderConfig, ModelParams, WindowConfig};

pub const WINDOW: WindowConfig = WindowConfig { max_window_len: 32, stride: 16 };

/// What the stub search service does with each request.
#[derive(Clone)]
pub enum Reply {
    Respond { status: u16, body: String },
    Stall(Duration),
}

/// Serves `replies` in order (the last one repeats) on a local port. Request
/// bodies are sent back through the receiver.
pub fn stub_server(replies: Vec<Reply>) -> (String, Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/search", listener.local_addr().unwrap());
    let (tx, rx) = channel();
    thread::spawn(move || {
        for (i, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let _ = tx.send(String::from_utf8_lossy(&body).into_owned());
            match replies[i.min(replies.len() - 1)].clone() {
                Reply::Respond { status, body } => {
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                }
                Reply::Stall(d) => thread::sleep(d),
            }
        }
    });
    (url, rx)
}

pub fn ok(body: serde_json::Value) -> Reply {
    Reply::Respond { status: 200, body: body.to_string() }
}

/// Every window of every training question.
pub fn train_on_fixture(fx: &SynthFixture, epochs: usize) -> ModelParams {
    let windows: Vec<_> =
        fx.training.iter().flat_map(|q| make_training_windows(q, &fx.corpus, &WINDOW).unwrap()).collect();
    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    train(&windows, EncoderConfig::toy(), &cfg, |_, _| {}).unwrap().params
}

/// A fixture on disk with a trained checkpoint and a pipeline config.
pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub fixture: SynthFixture,
    pub paths: FixturePaths,
    pub checkpoint: PathBuf,
    pub config_path: PathBuf,
}

impl Workspace {
    pub fn new(seed: u64, docs: usize, questions: usize, epochs: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let fixture = synth_generate(seed, docs, questions);
        let paths = write_fixture(dir.path(), &fixture).unwrap();
        let checkpoint = dir.path().join("model.ckpt");
        save_checkpoint(&checkpoint, &train_on_fixture(&fixture, epochs)).unwrap();
        let config_path = dir.path().join("config.json");
        let ws = Workspace { dir, fixture, paths, checkpoint, config_path };
        ws.write_config(&ws.config());
        ws
    }

    pub fn config(&self) -> PipelineConfig {
        PipelineConfig { windowing: WINDOW, ..PipelineConfig::new(&self.paths.corpus_root, &self.checkpoint) }
    }

    pub fn write_config(&self, cfg: &PipelineConfig) {
        write_json(&self.config_path, cfg);
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}
