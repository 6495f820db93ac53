//! Deterministic algorithms written as per-ID action sequences.
//!
//! On disk: a header line `N t`, then `N` lines of `t` characters over
//! `T` (transmit), `L` (listen) and `I` (idle).

use std::fmt;
use std::path::Path;

use crate::channel::{Action, Message};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Act {
    Transmit,
    Listen,
    Idle,
}

impl Act {
    pub fn code(self) -> char {
        match self {
            Act::Transmit => 'T',
            Act::Listen => 'L',
            Act::Idle => 'I',
        }
    }

    pub fn from_code(c: char) -> Option<Act> {
        match c {
            'T' => Some(Act::Transmit),
            'L' => Some(Act::Listen),
            'I' => Some(Act::Idle),
            _ => None,
        }
    }

    pub fn from_action(a: &Action) -> Act {
        match a {
            Action::Transmit(_) => Act::Transmit,
            Action::Listen => Act::Listen,
            Action::Idle => Act::Idle,
        }
    }

    /// Channel action for device `id`; transmissions carry the ID.
    pub fn to_action(self, id: u32) -> Action {
        match self {
            Act::Transmit => Action::Transmit(Message::new(id, 0, u64::from(id))),
            Act::Listen => Action::Listen,
            Act::Idle => Action::Idle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTable {
    rows: Vec<Vec<Act>>,
    t: usize,
}

impl ActionTable {
    pub fn new(rows: Vec<Vec<Act>>) -> Result<Self> {
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(invalid("all rows of an action table need the same length"));
        }
        Ok(ActionTable { rows, t })
    }

    pub fn idle(n: usize, t: usize) -> Self {
        ActionTable {
            rows: vec![vec![Act::Idle; t]; n],
            t,
        }
    }

    /// Number of IDs.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of rounds.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn row(&self, id: usize) -> &[Act] {
        &self.rows[id]
    }

    pub fn get(&self, id: usize, round: usize) -> Act {
        self.rows[id][round]
    }

    pub fn set(&mut self, id: usize, round: usize, a: Act) {
        self.rows[id][round] = a;
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hl + 1,
                msg: format!("header: {e}"),
            })?;
        let [n, t] = nums[..] else {
            return Err(Error::Parse {
                line: hl + 1,
                msg: "header must be `N t`".into(),
            });
        };
        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines {
            let row: Option<Vec<Act>> = line.trim().chars().map(Act::from_code).collect();
            let row = row.ok_or(Error::Parse {
                line: i + 1,
                msg: "actions must be T, L or I".into(),
            })?;
            if row.len() != t {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected {t} actions, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse {
                line: hl + 1,
                msg: format!("header announces {n} rows, found {}", rows.len()),
            });
        }
        Ok(ActionTable { rows, t })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for ActionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n(), self.t)?;
        for r in &self.rows {
            let s: String = r.iter().map(|a| a.code()).collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let t = ActionTable::parse("3 4\nTLII\nIIII\nLLTT\n").unwrap();
        assert_eq!(t.get(2, 2), Act::Transmit);
        assert_eq!(ActionTable::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(ActionTable::parse("2 2\nTT\nTX\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(ActionTable::parse("2 2\nTT\n"), Err(Error::Parse { .. })));
        assert!(matches!(ActionTable::parse("1 3\nTT\n"), Err(Error::Parse { line: 2, .. })));
    }
}
