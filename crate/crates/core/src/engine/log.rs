//! Tab-separated event log: `time_us, node, event_kind, packet_uid, packet_kind, detail`.

use std::cell::RefCell;
use std::fmt;
use std::io::{self, Write};
use std::rc::Rc;

use super::packet::{NodeId, Packet};
use super::time::SimTime;

pub struct EventLog {
    out: Box<dyn Write>,
    error: Option<io::Error>,
}

impl EventLog {
    pub fn new(out: Box<dyn Write>) -> Self {
        EventLog { out, error: None }
    }

    pub fn record(
        &mut self,
        t: SimTime,
        node: NodeId,
        event: &str,
        packet: Option<&Packet>,
        detail: fmt::Arguments<'_>,
    ) {
        if self.error.is_some() {
            return;
        }
        let res = match packet {
            Some(p) => writeln!(
                self.out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.as_micros(),
                node,
                event,
                p.uid,
                p.kind().as_str(),
                detail
            ),
            None => writeln!(self.out, "{}\t{}\t{}\t-\t-\t{}", t.as_micros(), node, event, detail),
        };
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()
    }
}

impl fmt::Debug for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventLog").finish_non_exhaustive()
    }
}

/// In-memory log sink that can be read back after the run.
#[derive(Clone, Default, Debug)]
pub struct MemoryLog(Rc<RefCell<Vec<u8>>>);

impl MemoryLog {
    pub fn contents(&self) -> Vec<u8> {
        self.0.borrow().clone()
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.0.borrow()).into_owned()
    }
}

impl Write for MemoryLog {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
