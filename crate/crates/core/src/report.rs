//! Run reports: per-item status lines with canonical-expression payloads,
//! plain-text and JSON renderings, and the exit-code contract.

use serde::Serialize;
use std::fmt;
use std::time::Instant;

/// Outcome of one report item, ordered from best to worst.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    /// The asserted identity holds.
    Pass,
    /// The computation succeeded but disagrees with a printed source value
    /// in a documented way (suspected misprint); not a failure.
    Warn,
    /// A mathematical assertion is false.
    Fail,
    /// Bad input (unknown name, unparsable expression, ...).
    Error,
    /// An internal cross-check failed; the engine itself is suspect.
    Internal,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::Internal => "INTERNAL",
        };
        f.pad(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Item {
    pub task: String,
    pub item: String,
    pub status: Status,
    pub payload: String,
    pub millis: u64,
}

#[derive(Clone, Default, Debug, Serialize)]
pub struct Report {
    pub items: Vec<Item>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Runs `f`, timing it, and records the outcome under `task`/`item`.
    pub fn run(&mut self, task: &str, item: &str, f: impl FnOnce() -> (Status, String)) {
        let start = Instant::now();
        let (status, payload) = f();
        self.items.push(Item {
            task: task.to_string(),
            item: item.to_string(),
            status,
            payload,
            millis: start.elapsed().as_millis() as u64,
        });
    }

    pub fn push(&mut self, item: Item) {
        self.items.push(item);
    }

    pub fn extend(&mut self, other: Report) {
        self.items.extend(other.items);
    }

    pub fn worst(&self) -> Status {
        self.items
            .iter()
            .map(|i| i.status)
            .max()
            .unwrap_or(Status::Pass)
    }

    /// 0 when everything passed (warnings allowed), 1 on a mathematical
    /// failure, 2 on input errors, 3 when an internal cross-check tripped.
    pub fn exit_code(&self) -> i32 {
        match self.worst() {
            Status::Pass | Status::Warn => 0,
            Status::Fail => 1,
            Status::Error => 2,
            Status::Internal => 3,
        }
    }

    pub fn count(&self, status: Status) -> usize {
        self.items.iter().filter(|i| i.status == status).count()
    }

    /// One line per item; multi-line payloads are indented under it.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for i in &self.items {
            out.push_str(&format!("{:8} {} :: {}", i.status, i.task, i.item));
            out.push_str(&format!("  ({} ms)\n", i.millis));
            if !i.payload.is_empty() {
                for line in i.payload.lines() {
                    out.push_str("         | ");
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
        out.push_str(&format!(
            "summary: {} pass, {} warn, {} fail, {} error\n",
            self.count(Status::Pass),
            self.count(Status::Warn),
            self.count(Status::Fail) ,
            self.count(Status::Error) + self.count(Status::Internal),
        ));
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(status: Status) -> Item {
        Item {
            task: "t".into(),
            item: "i".into(),
            status,
            payload: String::new(),
            millis: 0,
        }
    }

    #[test]
    fn exit_codes_follow_the_worst_status() {
        let mut r = Report::new();
        assert_eq!(r.exit_code(), 0);
        r.push(item(Status::Pass));
        r.push(item(Status::Warn));
        assert_eq!(r.exit_code(), 0);
        r.push(item(Status::Fail));
        assert_eq!(r.exit_code(), 1);
        r.push(item(Status::Error));
        assert_eq!(r.exit_code(), 2);
        r.push(item(Status::Internal));
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn renderings_carry_task_item_and_payload() {
        let mut r = Report::new();
        r.run("wave", "B1", || (Status::Pass, "H_p = 0".into()));
        let text = r.render_text();
        assert!(text.contains("PASS"));
        assert!(text.contains("wave :: B1"));
        assert!(text.contains("| H_p = 0"));
        let json = r.render_json();
        assert!(json.contains("\"status\": \"PASS\""));
        assert!(json.contains("\"millis\""));
    }
}
