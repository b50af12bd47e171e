//! External LP solver adapter: the LP is piped to a command in LP text
//! format and the solution read back as `<variable> <value>` lines.

use anyhow::Context;
use mvdlib::lp::{LpSolution, LpSolver, UltrametricLp};
use mvdlib::{Error, Result};
use std::io::Write;
use std::process::{Command, Stdio};

pub struct ExternalCommandSolver {
    command: String,
}

impl ExternalCommandSolver {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
        }
    }
}

impl LpSolver for ExternalCommandSolver {
    fn solve(&self, lp: &UltrametricLp) -> Result<LpSolution> {
        let run = || -> anyhow::Result<Vec<f64>> {
            let mut parts = self.command.split_whitespace();
            let program = parts.next().context("empty solver command")?;
            let mut child = Command::new(program)
                .args(parts)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()
                .with_context(|| format!("spawning {}", self.command))?;
            child
                .stdin
                .as_mut()
                .context("no stdin")?
                .write_all(lp.to_lp_text().as_bytes())?;
            let output = child.wait_with_output()?;
            if !output.status.success() {
                anyhow::bail!("solver exited with {}", output.status);
            }
            let text = String::from_utf8(output.stdout)?;
            let mut values = vec![0.0; lp.num_vars];
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (name, value) = line
                    .split_once(char::is_whitespace)
                    .with_context(|| format!("bad solution line {line:?}"))?;
                let mut it = name.trim_start_matches("d_").split('_');
                let t: usize = it.next().context("missing level")?.parse()?;
                let i: usize = it.next().context("missing i")?.parse()?;
                let j: usize = it.next().context("missing j")?.parse()?;
                values[lp.var(t, i, j)] = value.trim().parse()?;
            }
            Ok(values)
        };
        let values = run().map_err(|e| Error::Solver(format!("external solver: {e:#}")))?;
        let worst = lp.max_violation(&values);
        if worst > 1e-6 {
            return Err(Error::Solver(format!(
                "external solution violates constraints by {worst}"
            )));
        }
        Ok(LpSolution::from_values(lp, values))
    }
}
