use serde::{Deserialize, Serialize};

/// Counts stochastic evaluations `f(x, zeta)` and completed iterations for one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationLedger {
    stochastic_evals: u64,
    iterations: u64,
}

impl EvaluationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, evaluations: u64) {
        self.stochastic_evals = self.stochastic_evals.saturating_add(evaluations);
    }

    pub fn complete_iteration(&mut self) {
        self.iterations += 1;
    }

    pub fn stochastic_evals(&self) -> u64 {
        self.stochastic_evals
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }
}
