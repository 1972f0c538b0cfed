//! Markdown comparison tables over result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use qcluster::solvers::SolverKind;

use crate::run::{Problem, ResultFile};
use crate::{read_json, CliError, Result};

/// Published reference values in column order, quoted for context only.
const PAPER_ROWS: [(Problem, [&str; 4]); 3] = [
    (Problem::Divisive, ["1627.19", "2568.84", "1574.03", "1450.33"]),
    (Problem::Threemeans, ["4824.61", "5384.88", "4200.60", "2913.72"]),
    (Problem::Gmm, ["-993.1", "-461", "-992.5", "-1004.9"]),
];

pub fn render_files(paths: &[PathBuf]) -> Result<String> {
    let results = paths.iter().map(|p| read_json::<ResultFile>(p)).collect::<Result<Vec<_>>>()?;
    render(&results)
}

/// One row per problem present, columns `VQE | Random | Classical | Brute Force`.
pub fn render(results: &[ResultFile]) -> Result<String> {
    let mut rows: BTreeMap<Problem, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in results {
        let col = SolverKind::ALL.iter().position(|&s| s == r.solver).expect("known solver");
        if rows.entry(r.problem).or_default().insert(col, r.cost).is_some() {
            return Err(CliError::Config(format!(
                "two results for {} with solver {}",
                r.problem.as_str(),
                r.solver.as_str()
            )));
        }
    }
    let mut out = String::from("| |");
    for s in SolverKind::ALL {
        let _ = write!(out, " {} |", s.title());
    }
    out.push_str("\n|---|---|---|---|---|\n");
    let mut notes = Vec::new();
    for (problem, row) in &rows {
        let _ = write!(out, "| {} |", problem.title());
        for col in 0..SolverKind::ALL.len() {
            match row.get(&col) {
                Some(v) => {
                    let _ = write!(out, " {v:.4} |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
        let brute = SolverKind::ALL.iter().position(|&s| s == SolverKind::BruteForce).expect("listed");
        if let Some(&b) = row.get(&brute) {
            let beaten: Vec<&str> = row
                .iter()
                .filter(|(&c, &v)| c != brute && v < b)
                .map(|(&c, _)| SolverKind::ALL[c].title())
                .collect();
            if !beaten.is_empty() {
                notes.push(format!(
                    "{}: {} scored below Brute Force on this cost. The exhaustive search \
                     minimizes the Hamiltonian, which approximates the reported cost.",
                    problem.title(),
                    beaten.join(", ")
                ));
            }
        }
    }
    out.push_str("\nCosts: divisive is the total within-split squared distance averaged over repetitions; \
                  3-means is the weighted within-cluster cost; GMM is the classification negative log-likelihood.\n");
    for n in notes {
        let _ = writeln!(out, "\n{n}");
    }
    out.push_str("\nPaper reference values (different, unpublished datasets and coresets; not reproducible):\n\n");
    for (problem, values) in PAPER_ROWS {
        let _ = writeln!(out, "- {}: {}", problem.title(), values.join(" / "));
    }
    Ok(out)
}
