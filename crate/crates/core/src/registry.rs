//! Estimators as named strategies.
//!
//! Each estimator implements [`Estimator`]; an [`EstimatorRegistry`] maps
//! names to boxed strategies so the CLI and the simulation harness can pick
//! them at runtime. Name lookup ignores case and the characters `+ - _`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimator::{fit, normalize_name, EstimatorKind, FitConfig, FitReport};
use crate::types::{DesignMatrix, GroupPartition, ResponseMatrix};

pub trait Estimator: Send + Sync {
    /// Display name, used in every emitted table.
    fn name(&self) -> &str;

    fn kind(&self) -> EstimatorKind;

    fn fit(
        &self,
        x: &DesignMatrix,
        y: &ResponseMatrix,
        partition: Arc<GroupPartition>,
        config: &FitConfig,
    ) -> Result<FitReport>;
}

/// Group lasso with sparse precision estimation.
#[derive(Debug, Default, Clone, Copy)]
pub struct GroupLassoCov;

/// Group lasso with `Ω = I`.
#[derive(Debug, Default, Clone, Copy)]
pub struct GroupLasso;

/// Lasso (singleton groups) with sparse precision estimation.
#[derive(Debug, Default, Clone, Copy)]
pub struct LassoCov;

/// Lasso (singleton groups) with `Ω = I`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Lasso;

macro_rules! standard_estimator {
    ($ty:ty, $kind:expr) => {
        impl Estimator for $ty {
            fn name(&self) -> &str {
                $kind.name()
            }

            fn kind(&self) -> EstimatorKind {
                $kind
            }

            fn fit(
                &self,
                x: &DesignMatrix,
                y: &ResponseMatrix,
                partition: Arc<GroupPartition>,
                config: &FitConfig,
            ) -> Result<FitReport> {
                fit($kind, x, y, partition, config)
            }
        }
    };
}

standard_estimator!(GroupLassoCov, EstimatorKind::GroupLassoCov);
standard_estimator!(GroupLasso, EstimatorKind::GroupLasso);
standard_estimator!(LassoCov, EstimatorKind::LassoCov);
standard_estimator!(Lasso, EstimatorKind::Lasso);

pub fn strategy_for(kind: EstimatorKind) -> Arc<dyn Estimator> {
    match kind {
        EstimatorKind::GroupLassoCov => Arc::new(GroupLassoCov),
        EstimatorKind::GroupLasso => Arc::new(GroupLasso),
        EstimatorKind::LassoCov => Arc::new(LassoCov),
        EstimatorKind::Lasso => Arc::new(Lasso),
    }
}

#[derive(Clone, Default)]
pub struct EstimatorRegistry {
    entries: BTreeMap<String, Arc<dyn Estimator>>,
    /// Registration order, for stable listing.
    order: Vec<String>,
}

impl std::fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl EstimatorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the four standard estimators.
    pub fn with_defaults() -> Self {
        let mut registry = Self::new();
        for kind in EstimatorKind::ALL {
            registry
                .register(strategy_for(kind))
                .expect("default names are distinct");
        }
        registry
    }

    pub fn register(&mut self, estimator: Arc<dyn Estimator>) -> Result<()> {
        let key = normalize_name(estimator.name());
        if self.entries.contains_key(&key) {
            return Err(Error::Configuration(format!(
                "estimator {:?} is already registered",
                estimator.name()
            )));
        }
        self.order.push(key.clone());
        self.entries.insert(key, estimator);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Estimator>> {
        self.entries
            .get(&normalize_name(name))
            .cloned()
            .ok_or_else(|| {
                Error::Configuration(format!(
                    "unknown estimator {name:?}; available: {}",
                    self.names().join(", ")
                ))
            })
    }

    /// Resolves a comma-separated list; `all` selects every registered entry.
    pub fn resolve_list(&self, list: &str) -> Result<Vec<Arc<dyn Estimator>>> {
        if list.trim().eq_ignore_ascii_case("all") {
            return Ok(self.order.iter().map(|k| self.entries[k].clone()).collect());
        }
        let mut out: Vec<Arc<dyn Estimator>> = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let est = self.get(name)?;
            if out.iter().any(|e| e.name() == est.name()) {
                return Err(Error::Configuration(format!(
                    "estimator {name:?} listed twice"
                )));
            }
            out.push(est);
        }
        if out.is_empty() {
            return Err(Error::Configuration("no estimators selected".into()));
        }
        Ok(out)
    }

    pub fn names(&self) -> Vec<&str> {
        self.order.iter().map(|k| self.entries[k].name()).collect()
    }
}
