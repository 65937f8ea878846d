//! Ordered first-match rule dispatch from graphs to device records.

use std::fmt;

use crate::error::{Error, Result};
use crate::ir::{Graph, NodeId};

type Matcher<C, R> = dyn Fn(&Graph, NodeId, &C) -> Result<Option<R>> + Send + Sync;

/// A named matcher. `Ok(None)` means "not my shape"; `Err` means the shape
/// matched but the parameters are illegal for the device.
pub struct MunchRule<C, R> {
    name: String,
    matcher: Box<Matcher<C, R>>,
}

impl<C, R> MunchRule<C, R> {
    pub fn new(
        name: impl Into<String>,
        matcher: impl Fn(&Graph, NodeId, &C) -> Result<Option<R>> + Send + Sync + 'static,
    ) -> Self {
        MunchRule {
            name: name.into(),
            matcher: Box::new(matcher),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl<C, R> fmt::Debug for MunchRule<C, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MunchRule").field("name", &self.name).finish()
    }
}

#[derive(Debug)]
pub struct Muncher<C, R> {
    rules: Vec<MunchRule<C, R>>,
    config: C,
}

impl<C, R> Muncher<C, R> {
    pub fn new(rules: Vec<MunchRule<C, R>>, config: C) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::EmptyMuncher);
        }
        Ok(Muncher { rules, config })
    }

    pub fn config(&self) -> &C {
        &self.config
    }

    pub fn rule_names(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.name.clone()).collect()
    }

    /// Output of the first rule that matches, tried in registration order.
    pub fn munch(&self, graph: &Graph, root: NodeId) -> Result<R> {
        for rule in &self.rules {
            if let Some(record) = (rule.matcher)(graph, root, &self.config)? {
                return Ok(record);
            }
        }
        Err(Error::NoMatch {
            kind: graph.get(root).map_or("missing", |n| n.kind()),
            tried: self.rule_names(),
        })
    }
}
