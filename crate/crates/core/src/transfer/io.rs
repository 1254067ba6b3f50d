//! Text form of a source table: a header line, then one line per nonzero
//! entry, `n_agents agent rel joint value`, e.g. `2 1 1,-1 up,left -10`.
//! Agents count from 1. Absent entries read back as zero.

use super::{RelativeState, SourceTaskQ, TransferError};
use crate::environments::Action;
use crate::equilibrium::JointSpace;

pub fn write_source_task(q: &SourceTaskQ) -> String {
    let n = q.n_agents();
    let space = JointSpace::new(&vec![Action::COUNT; n]);
    let mut out = format!("# source-task agents {n}\n");
    for agent in 0..n {
        let mut rels: Vec<&RelativeState> = q.relative_states(agent).collect();
        rels.sort();
        for rel in rels {
            for (j, &v) in q.entry(agent, rel).expect("listed state").iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let names: Vec<&str> = space
                    .decode(j)
                    .0
                    .iter()
                    .map(|&a| Action::from_index(a).name())
                    .collect();
                out.push_str(&format!("{n} {} {rel} {} {v}\n", agent + 1, names.join(",")));
            }
        }
    }
    out
}

pub fn read_source_task(text: &str) -> Result<SourceTaskQ, TransferError> {
    let err = |line: usize, message: String| TransferError::Format { line, message };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let n: usize = match lines.next() {
        Some((_, h)) => h
            .strip_prefix("# source-task agents ")
            .and_then(|s| s.trim().parse().ok())
            .filter(|&n| n >= 2)
            .ok_or_else(|| err(1, format!("expected `# source-task agents N`, got `{h}`")))?,
        None => return Err(err(1, "empty source table".into())),
    };
    let space = JointSpace::new(&vec![Action::COUNT; n]);
    let mut q = SourceTaskQ::new(n);
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(err(ln, format!("expected 5 fields, found {}", toks.len())));
        }
        if toks[0].parse::<usize>() != Ok(n) {
            return Err(err(ln, format!("agent count `{}` disagrees with header {n}", toks[0])));
        }
        let agent = toks[1]
            .parse::<usize>()
            .ok()
            .filter(|a| (1..=n).contains(a))
            .ok_or_else(|| err(ln, format!("bad agent `{}`", toks[1])))?
            - 1;
        let comps = toks[2]
            .split(',')
            .map(|d| d.parse::<i32>())
            .collect::<Result<Vec<i32>, _>>()
            .map_err(|_| err(ln, format!("bad relative state `{}`", toks[2])))?;
        if comps.len() != 2 * (n - 1) {
            return Err(err(
                ln,
                format!("relative state `{}` needs {} components", toks[2], 2 * (n - 1)),
            ));
        }
        let actions = toks[3]
            .split(',')
            .map(|a| a.parse::<Action>().map(Action::index))
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|e| err(ln, e))?;
        if actions.len() != n {
            return Err(err(ln, format!("joint action `{}` needs {n} actions", toks[3])));
        }
        let value: f64 = toks[4]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(ln, format!("bad value `{}`", toks[4])))?;
        q.entry_mut(agent, &RelativeState::from_components(comps))[space.encode(&actions)] = value;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_values() {
        let mut q = SourceTaskQ::new(3);
        let rel = RelativeState::from_components(vec![1, 0, -2, 1]);
        q.entry_mut(0, &rel)[5] = -10.0;
        q.entry_mut(2, &rel)[63] = -2.5;
        let text = write_source_task(&q);
        assert!(text.contains("3 1 1,0,-2,1 up,down,down -10"), "{text}");
        let back = read_source_task(&text).unwrap();
        for agent in 0..3 {
            for j in 0..64 {
                assert_eq!(back.value(agent, &rel, j), q.value(agent, &rel, j));
            }
        }
    }

    #[test]
    fn malformed_lines_report_numbers() {
        let bad = "# source-task agents 2\n2 1 1,-1 up,sideways -10\n";
        assert!(matches!(
            read_source_task(bad),
            Err(TransferError::Format { line: 2, .. })
        ));
        let short = "# source-task agents 2\n2 1 1 up,left -10\n";
        assert!(matches!(
            read_source_task(short),
            Err(TransferError::Format { line: 2, .. })
        ));
        assert!(matches!(
            read_source_task("nonsense"),
            Err(TransferError::Format { line: 1, .. })
        ));
    }
}
