use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::ring::NodeIndex;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Look,
    Move,
    Stay,
}

/// One scheduler step. Configurations use the `n=..;occ=..` text form.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub robot: usize,
    pub kind: EventKind,
    pub phase: u8,
    pub class: String,
    pub before: String,
    pub after: String,
    /// Node the robot stepped onto, for moves.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<NodeIndex>,
}

/// Writes one JSON record per line.
pub fn write_trace<W: Write>(mut out: W, events: &[TraceEvent]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let e = TraceEvent {
            step: 3,
            robot: 1,
            kind: EventKind::Move,
            phase: 2,
            class: "SB(3)".into(),
            before: "n=8;occ=1,1,1,0,0,0,0,0".into(),
            after: "n=8;occ=0,2,1,0,0,0,0,0".into(),
            target: Some(1),
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, std::slice::from_ref(&e)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"step\":3,\"robot\":1,\"kind\":\"move\",\"phase\":2,\"class\":\"SB(3)\",\
             \"before\":\"n=8;occ=1,1,1,0,0,0,0,0\",\"after\":\"n=8;occ=0,2,1,0,0,0,0,0\",\"target\":1}\n"
        );
        assert_eq!(read_trace(&text).unwrap(), vec![e]);
    }
}
