//! Process-boundary adapter for external exact solvers.
//!
//! Problem file (JSON): `{"n_tests": N, "costs": [f64], "constraints":
//! [{"coeffs": [f64], "strict": bool}]}` — select a subset S of 0..N
//! minimizing the summed cost subject to, for every constraint,
//! `sum_{t in S} coeffs[t] >= 0` (`> 0` when strict) with S non-empty.
//!
//! Solution file (JSON): `{"selected": [usize]}`.
//!
//! The adapter runs `command <problem-file> <solution-file>` and expects
//! exit status 0. Selections are re-validated by the caller
//! (`exact_minimize_with`), so a buggy solver cannot smuggle in an
//! infeasible answer — only a suboptimal one.

use std::path::PathBuf;
use std::process::Command;

use rtsm_core::exact::{ExactBackend, ExactModel};
use rtsm_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize)]
struct ProblemFile<'a> {
    n_tests: usize,
    costs: &'a [f64],
    constraints: Vec<ConstraintRow<'a>>,
}

#[derive(Debug, Serialize)]
struct ConstraintRow<'a> {
    coeffs: &'a [f64],
    strict: bool,
}

#[derive(Debug, Deserialize)]
struct AnswerFile {
    selected: Vec<usize>,
}

/// Exact backend that shells out to an external optimizer.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: PathBuf,
}

impl ExternalSolver {
    pub fn new(command: impl Into<PathBuf>) -> Self {
        ExternalSolver { command: command.into() }
    }
}

impl ExactBackend for ExternalSolver {
    fn minimize(&self, model: &ExactModel) -> rtsm_core::Result<Vec<usize>> {
        let dir = tempfile::tempdir()
            .map_err(|e| Error::Backend(format!("cannot create temp dir: {e}")))?;
        let problem_path = dir.path().join("problem.json");
        let answer_path = dir.path().join("solution.json");
        let problem = ProblemFile {
            n_tests: model.n_tests,
            costs: &model.costs,
            constraints: model
                .constraints
                .iter()
                .map(|c| ConstraintRow { coeffs: &c.coeffs, strict: c.strict })
                .collect(),
        };
        let body = serde_json::to_string(&problem)
            .map_err(|e| Error::Backend(format!("cannot encode problem: {e}")))?;
        std::fs::write(&problem_path, body)
            .map_err(|e| Error::Backend(format!("cannot write problem file: {e}")))?;
        let status = Command::new(&self.command)
            .arg(&problem_path)
            .arg(&answer_path)
            .status()
            .map_err(|e| Error::Backend(format!("cannot run {}: {e}", self.command.display())))?;
        if !status.success() {
            return Err(Error::Backend(format!(
                "{} exited with {status}",
                self.command.display()
            )));
        }
        let body = std::fs::read_to_string(&answer_path)
            .map_err(|e| Error::Backend(format!("cannot read solution file: {e}")))?;
        let answer: AnswerFile = serde_json::from_str(&body)
            .map_err(|e| Error::Backend(format!("invalid solution file: {e}")))?;
        Ok(answer.selected)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rtsm_core::exact::exact_minimize_with;
    use rtsm_core::{PerformanceMatrix, RtsmInstance};
    use std::os::unix::fs::PermissionsExt;

    fn fake_solver(dir: &std::path::Path, answer: &str) -> PathBuf {
        let path = dir.join("solver.sh");
        std::fs::write(&path, format!("#!/bin/sh\nprintf '%s' '{answer}' > \"$2\"\n")).unwrap();
        let mut perms = std::fs::metadata(&path).unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&path, perms).unwrap();
        path
    }

    fn instance() -> RtsmInstance {
        // Variant 0 beats variant 1 overall; test 0 alone preserves that.
        let m = PerformanceMatrix::from_rows("m", &[vec![3.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]])
            .unwrap();
        RtsmInstance::single(m, 1.0).unwrap()
    }

    #[test]
    fn accepts_a_valid_external_answer() {
        let dir = tempfile::tempdir().unwrap();
        let solver = ExternalSolver::new(fake_solver(dir.path(), r#"{"selected": [0]}"#));
        let sol = exact_minimize_with(&instance(), &solver).unwrap();
        assert_eq!(sol.tests.as_slice(), &[0]);
    }

    #[test]
    fn rejects_an_infeasible_external_answer() {
        let dir = tempfile::tempdir().unwrap();
        // Test 2 alone ranks variant 1 first, inverting the full order;
        // validation must catch it.
        let solver = ExternalSolver::new(fake_solver(dir.path(), r#"{"selected": [2]}"#));
        assert!(exact_minimize_with(&instance(), &solver).is_err());
    }

    #[test]
    fn reports_solver_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solver.sh");
        std::fs::write(&path, "#!/bin/sh\nexit 3\n").unwrap();
        let mut perms = std::fs::metadata(&path).unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&path, perms).unwrap();
        let err = exact_minimize_with(&instance(), &ExternalSolver::new(path)).unwrap_err();
        assert!(format!("{err}").contains("exited"));
    }
}
