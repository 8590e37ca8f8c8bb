//! Line-delimited transition logs: one JSON object `{t, s, a, r, s_next, done}` per line.
//! A record with `t == 0` starts a new trajectory.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Trajectory, Transition};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Record {
    t: usize,
    s: Vec<f64>,
    a: Vec<f64>,
    r: f64,
    s_next: Vec<f64>,
    done: bool,
}

pub fn write_jsonl<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<()> {
    for traj in trajectories {
        for tr in &traj.transitions {
            let rec = Record {
                t: tr.t,
                s: tr.state.clone(),
                a: tr.action.clone(),
                r: tr.reward,
                s_next: tr.next_state.clone(),
                done: tr.done,
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Trajectory>> {
    let mut out: Vec<Trajectory> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)?;
        if rec.t == 0 || out.is_empty() {
            if rec.t != 0 {
                return Err(Error::InvalidInput(format!("line {}: first record must have t = 0", lineno + 1)));
            }
            out.push(Trajectory::default());
        }
        out.last_mut().expect("pushed above").transitions.push(Transition {
            t: rec.t,
            state: rec.s,
            action: rec.a,
            reward: rec.r,
            next_state: rec.s_next,
            done: rec.done,
        });
    }
    Ok(out)
}
