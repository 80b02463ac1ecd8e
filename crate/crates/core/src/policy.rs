//! Scripted decision makers for batch runs.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::engine::{Decision, DecisionPrompt, PromptCase, StateSummary};
use crate::model::EPS;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Decide(Decision),
    Abstain(String),
}

pub trait DecisionMaker {
    fn decide(&mut self, prompt: &DecisionPrompt, summary: &StateSummary) -> Verdict;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "limit", rename_all = "snake_case")]
pub enum Policy {
    /// Accept every overrun; defer the most demanding task when staffing fails.
    AlwaysAccept,
    /// Accept an overrun only while committed cost plus the wave stays within
    /// the limit; otherwise defer.
    BudgetCap(f64),
    /// Defer on overrun while the deferral still fits before the limit;
    /// otherwise accept.
    DeadlineCap(f64),
    /// Answers come from outside the process; see [`ExternalPolicy`].
    External,
}

impl Policy {
    pub fn decide(&self, prompt: &DecisionPrompt, summary: &StateSummary) -> Verdict {
        let overrun = matches!(prompt.case, PromptCase::CostOverrun { .. });
        let fallback = |why: &str| match defer_most_demanding(prompt) {
            Some(d) => Verdict::Decide(d),
            None => Verdict::Abstain(why.to_string()),
        };
        match *self {
            Policy::External => {
                Verdict::Abstain("external policy has no decision source attached".into())
            }
            _ if !overrun => fallback("staffing is infeasible and no task can be deferred"),
            Policy::AlwaysAccept => Verdict::Decide(Decision::AcceptCost),
            Policy::BudgetCap(limit) => {
                let PromptCase::CostOverrun { proposed_cost, .. } = prompt.case else {
                    unreachable!()
                };
                if summary.committed_cost + proposed_cost <= limit + EPS {
                    Verdict::Decide(Decision::AcceptCost)
                } else {
                    fallback("budget exceeded and no task can be deferred")
                }
            }
            Policy::DeadlineCap(limit) => {
                if summary.clock + prompt.defer_delay_bound > limit + EPS {
                    return Verdict::Decide(Decision::AcceptCost);
                }
                Verdict::Decide(defer_most_demanding(prompt).unwrap_or(Decision::AcceptCost))
            }
        }
    }
}

impl DecisionMaker for Policy {
    fn decide(&mut self, prompt: &DecisionPrompt, summary: &StateSummary) -> Verdict {
        Policy::decide(self, prompt, summary)
    }
}

/// Deferral of the single ready task with the largest total demand (ties
/// by id), if the progress rule allows it.
pub fn defer_most_demanding(prompt: &DecisionPrompt) -> Option<Decision> {
    if prompt.ready.len() <= 1 && !prompt.can_defer_all() {
        return None;
    }
    let mut best = prompt.ready.first()?;
    for r in &prompt.ready[1..] {
        if r.demand > best.demand || (r.demand == best.demand && r.id < best.id) {
            best = r;
        }
    }
    Some(Decision::DeferTasks { tasks: vec![best.id.clone()] })
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::AlwaysAccept => write!(f, "always-accept"),
            Policy::BudgetCap(l) => write!(f, "budget:{l}"),
            Policy::DeadlineCap(l) => write!(f, "deadline:{l}"),
            Policy::External => write!(f, "external"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let limit = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("invalid limit `{v}` in policy `{s}`"))
        };
        match s.split_once(':') {
            None if s == "always-accept" => Ok(Policy::AlwaysAccept),
            None if s == "external" => Ok(Policy::External),
            Some(("budget", v)) => Ok(Policy::BudgetCap(limit(v)?)),
            Some(("deadline", v)) => Ok(Policy::DeadlineCap(limit(v)?)),
            _ => Err(format!(
                "unknown policy `{s}` (expected always-accept, budget:<real>, deadline:<real>, external)"
            )),
        }
    }
}

/// Forwards each prompt through `notify` and blocks for an answer on
/// `answers`. Silence past `timeout` or a closed channel is an abstention.
pub struct ExternalPolicy<N> {
    notify: N,
    answers: Receiver<Decision>,
    timeout: Duration,
}

impl<N> ExternalPolicy<N>
where
    N: FnMut(&DecisionPrompt, &StateSummary),
{
    pub fn new(notify: N, answers: Receiver<Decision>, timeout: Duration) -> Self {
        ExternalPolicy { notify, answers, timeout }
    }
}

impl<N> DecisionMaker for ExternalPolicy<N>
where
    N: FnMut(&DecisionPrompt, &StateSummary),
{
    fn decide(&mut self, prompt: &DecisionPrompt, summary: &StateSummary) -> Verdict {
        (self.notify)(prompt, summary);
        match self.answers.recv_timeout(self.timeout) {
            Ok(d) => Verdict::Decide(d),
            Err(RecvTimeoutError::Timeout) => Verdict::Abstain("timed out waiting for a decision".into()),
            Err(RecvTimeoutError::Disconnected) => Verdict::Abstain("decision source closed".into()),
        }
    }
}

/// Plays back a fixed list of decisions, then abstains.
#[derive(Debug, Clone, Default)]
pub struct Scripted(pub VecDeque<Decision>);

impl Scripted {
    pub fn new(decisions: impl IntoIterator<Item = Decision>) -> Self {
        Scripted(decisions.into_iter().collect())
    }
}

impl DecisionMaker for Scripted {
    fn decide(&mut self, _: &DecisionPrompt, _: &StateSummary) -> Verdict {
        match self.0.pop_front() {
            Some(d) => Verdict::Decide(d),
            None => Verdict::Abstain("script exhausted".into()),
        }
    }
}
