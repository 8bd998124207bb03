//! Graphical multiple-testing procedure.
//!
//! Each hypothesis is a node carrying a nominal level; directed edges carry
//! the fraction of a rejected node's level passed on to each survivor. With
//! equal sharing on a complete graph this is Holm's procedure, generalized to
//! unequal starting levels.

use serde::Serialize;

use crate::design::AlphaSplit;
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestGraph {
    weights: Vec<f64>,
    /// `transfer[i][j]`: fraction of node i's level passed to node j.
    transfer: Vec<Vec<f64>>,
    live: Vec<bool>,
}

/// One rejection: which node fell and the levels afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub rejected: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionOutcome {
    pub rejected: Vec<bool>,
    pub trace: Vec<Step>,
}

impl TestGraph {
    pub fn new(weights: Vec<f64>, transfer: Vec<Vec<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::domain("a test graph needs at least one node"));
        }
        if transfer.len() != k || transfer.iter().any(|row| row.len() != k) {
            return Err(Error::domain("transfer matrix must be k x k"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::domain(format!("node weights must be nonnegative, got {w}")));
        }
        if weights.iter().sum::<f64>() > 1.0 + ROW_SUM_TOL {
            return Err(Error::domain("node weights sum to more than 1"));
        }
        for (i, row) in transfer.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::domain(format!("self-loop on node {i}")));
            }
            if row.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(Error::domain(format!("negative transfer out of node {i}")));
            }
            if row.iter().sum::<f64>() > 1.0 + ROW_SUM_TOL {
                return Err(Error::domain(format!("transfers out of node {i} sum to more than 1")));
            }
        }
        Ok(TestGraph { live: vec![true; k], weights, transfer })
    }

    /// Complete graph with equal sharing, `g_ij = 1 / (k - 1)`, starting
    /// from the levels of `split`.
    pub fn holm_complete(split: &AlphaSplit) -> Self {
        let k = split.len();
        let share = if k > 1 { 1.0 / (k - 1) as f64 } else { 0.0 };
        let transfer = (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { share }).collect()).collect();
        TestGraph { weights: split.alphas(), transfer, live: vec![true; k] }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn transfer(&self) -> &[Vec<f64>] {
        &self.transfer
    }

    pub fn live(&self) -> &[bool] {
        &self.live
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().zip(&self.live).filter(|(_, &l)| l).map(|(w, _)| w).sum()
    }

    /// Reject node `j`: pass its level along its outgoing edges, reconnect
    /// the survivors around it and remove it.
    pub fn update(&self, j: usize) -> Result<TestGraph> {
        if j >= self.k() || !self.live[j] {
            return Err(Error::domain(format!("node {j} is not live")));
        }
        let k = self.k();
        let mut next = self.clone();
        for l in 0..k {
            if l == j || !self.live[l] {
                continue;
            }
            next.weights[l] = self.weights[l] + self.weights[j] * self.transfer[j][l];
            for m in 0..k {
                if m == l || m == j || !self.live[m] {
                    continue;
                }
                let denom = 1.0 - self.transfer[l][j] * self.transfer[j][l];
                next.transfer[l][m] = if denom > 0.0 {
                    (self.transfer[l][m] + self.transfer[l][j] * self.transfer[j][m]) / denom
                } else {
                    0.0
                };
            }
        }
        next.weights[j] = 0.0;
        next.live[j] = false;
        for i in 0..k {
            next.transfer[i][j] = 0.0;
            next.transfer[j][i] = 0.0;
        }
        Ok(next)
    }

    /// Live nodes whose p-value is at or below their current level.
    pub fn eligible(&self, p: &[f64]) -> Vec<usize> {
        (0..self.k()).filter(|&i| self.live[i] && p[i] <= self.weights[i]).collect()
    }

    /// Run the procedure to completion, always rejecting the lowest eligible
    /// index first.
    pub fn run(&self, p: &[f64]) -> Result<RejectionOutcome> {
        if p.len() != self.k() {
            return Err(Error::domain(format!("{} p-values for {} hypotheses", p.len(), self.k())));
        }
        if let Some(bad) = p.iter().find(|v| v.is_nan()) {
            return Err(Error::domain(format!("invalid p-value {bad}")));
        }
        let mut graph = self.clone();
        let mut trace = Vec::new();
        while let Some(&j) = graph.eligible(p).first() {
            graph = graph.update(j)?;
            trace.push(Step { rejected: j, weights: graph.weights.clone() });
        }
        Ok(RejectionOutcome { rejected: graph.live.iter().map(|l| !l).collect(), trace })
    }
}

impl RejectionOutcome {
    /// Re-apply the trace to `initial`, returning the per-step weights and
    /// checking they match the recorded ones.
    pub fn replay(&self, initial: &TestGraph) -> Result<Vec<Vec<f64>>> {
        let mut graph = initial.clone();
        let mut history = vec![graph.weights.clone()];
        for step in &self.trace {
            graph = graph.update(step.rejected)?;
            if graph.weights != step.weights {
                return Err(Error::domain(format!("trace diverges after rejecting node {}", step.rejected)));
            }
            history.push(graph.weights.clone());
        }
        let rejected: Vec<bool> = graph.live.iter().map(|l| !l).collect();
        if rejected != self.rejected {
            return Err(Error::domain("trace does not reproduce the rejected set"));
        }
        Ok(history)
    }

    pub fn count(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }

    /// Rejected set as a bit mask (bit i set when hypothesis i is rejected).
    pub fn mask(&self) -> usize {
        self.rejected.iter().enumerate().filter(|(_, &r)| r).fold(0, |m, (i, _)| m | (1 << i))
    }
}

/// Complete equal-sharing graph for a split.
pub fn holm_complete_graph(split: &AlphaSplit) -> TestGraph {
    TestGraph::holm_complete(split)
}

pub fn update_graph(g: &TestGraph, j: usize) -> Result<TestGraph> {
    g.update(j)
}

pub fn run_procedure(g: &TestGraph, p: &[f64]) -> Result<RejectionOutcome> {
    g.run(p)
}
