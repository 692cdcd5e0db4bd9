use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::categorical::{categorical_truth, gen_categorical};
use super::rng::replication_rng;
use super::sigma::{make_sigma, SigmaKind};
use super::var::{simulate_var2, var_to_regression, var_truth, DEFAULT_BURN_IN};
use super::GroundTruth;
use crate::error::{Error, Result};
use crate::types::{DesignMatrix, GroupPartition, ResponseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    /// `n` observations of `groups` categorical predictors, `q` responses.
    Categorical { n: usize, groups: usize, q: usize },
    /// A `q`-dimensional VAR(2) observed for `t` periods.
    Var2 { q: usize, t: usize, burn_in: usize },
}

impl Design {
    pub fn q(&self) -> usize {
        match *self {
            Design::Categorical { q, .. } | Design::Var2 { q, .. } => q,
        }
    }
}

/// One simulation design.
///
/// Text form is one `key = value` pair per line; `#` starts a comment.
/// Keys: `name`, `design` (`categorical` | `var2`), `n`, `groups`, `q`, `t`,
/// `burn_in`, `sigma` (`sparse` | `diagonal` | `dense`), `rho`,
/// `replications`, `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub design: Design,
    pub sigma: SigmaKind,
    pub replications: usize,
    pub seed: u64,
}

/// Data and truth for one replication.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub x: DesignMatrix,
    pub y: ResponseMatrix,
    pub partition: Arc<GroupPartition>,
    pub truth: GroundTruth,
    /// The simulated `T × q` series, for VAR designs.
    pub series: Option<DMatrix<f64>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Configuration(format!("scenario {:?}: {m}", self.name)));
        if self.replications == 0 {
            return bad("replications must be >= 1");
        }
        match self.design {
            Design::Categorical { n, groups, q } => {
                if n == 0 || groups == 0 || q == 0 {
                    return bad("n, groups and q must be >= 1");
                }
                if (2 * groups) % q != 0 {
                    return bad("2 * groups must be a multiple of q");
                }
            }
            Design::Var2 { q, t, .. } => {
                if q < 2 {
                    return bad("var2 needs q >= 2");
                }
                if t < 3 {
                    return bad("var2 needs t >= 3");
                }
            }
        }
        if let SigmaKind::SparseOmega { rho } = self.sigma {
            if !(rho > -1.0 && rho < 1.0) {
                return bad("rho must lie in (-1, 1)");
            }
        }
        Ok(())
    }

    /// Generates replication `r` from its own random stream.
    pub fn replicate(&self, r: u64) -> Result<Replicate> {
        self.validate()?;
        let mut rng = replication_rng(self.seed, r);
        let sigma = make_sigma(self.sigma, self.design.q())?;
        match self.design {
            Design::Categorical { n, groups, q } => {
                let (x, _) = gen_categorical(n, groups, &mut rng)?;
                let truth = categorical_truth(groups, q, sigma.clone())?;
                let l = nalgebra::Cholesky::new(sigma).expect("validated").l();
                let noise = DMatrix::<f64>::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng));
                let y = x.values() * truth.coefficients.values() + noise * l.transpose();
                Ok(Replicate {
                    x,
                    y: ResponseMatrix::new(y)?,
                    partition: truth.coefficients.partition().clone(),
                    truth,
                    series: None,
                })
            }
            Design::Var2 { q, t, burn_in } => {
                let truth = var_truth(q, sigma.clone(), &mut rng)?;
                let v = truth.var.as_ref().expect("var truth");
                let series = simulate_var2(&v.b1, &v.b2, &sigma, t, burn_in, &mut rng)?;
                let (x, y, partition) = var_to_regression(series.values(), 2)?;
                Ok(Replicate {
                    x,
                    y,
                    partition: Arc::new(partition),
                    truth,
                    series: Some(series.values().clone()),
                })
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "name = {}", self.name)?;
        match self.design {
            Design::Categorical { n, groups, q } => {
                writeln!(f, "design = categorical")?;
                writeln!(f, "n = {n}")?;
                writeln!(f, "groups = {groups}")?;
                writeln!(f, "q = {q}")?;
            }
            Design::Var2 { q, t, burn_in } => {
                writeln!(f, "design = var2")?;
                writeln!(f, "q = {q}")?;
                writeln!(f, "t = {t}")?;
                writeln!(f, "burn_in = {burn_in}")?;
            }
        }
        writeln!(f, "sigma = {}", self.sigma.label())?;
        if let SigmaKind::SparseOmega { rho } = self.sigma {
            writeln!(f, "rho = {rho}")?;
        }
        writeln!(f, "replications = {}", self.replications)?;
        writeln!(f, "seed = {}", self.seed)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut name = None;
        let mut design = None;
        let mut sigma = None;
        let mut nums: std::collections::HashMap<&'static str, (u64, String)> = Default::default();
        const NUMERIC: [&str; 8] = ["n", "groups", "q", "t", "burn_in", "rho", "replications", "seed"];

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: "expected `key = value`".into(),
                });
            };
            let key = content[..eq].trim().to_ascii_lowercase();
            let value = content[eq + 1..].trim().to_string();
            let value_col = (eq + 2 + content[eq + 1..].len() - content[eq + 1..].trim_start().len()) as u64;
            let err = |message: String| Error::Parse {
                line: line_no,
                column: value_col,
                message,
            };
            match key.as_str() {
                "name" => name = Some(value),
                "design" => {
                    design = Some(match value.to_ascii_lowercase().as_str() {
                        "categorical" => "categorical",
                        "var2" | "var" => "var2",
                        other => return Err(err(format!("unknown design {other:?}"))),
                    })
                }
                "sigma" => {
                    sigma = Some(match value.to_ascii_lowercase().as_str() {
                        "sparse" => "sparse",
                        "diagonal" => "diagonal",
                        "dense" => "dense",
                        other => return Err(err(format!("unknown sigma kind {other:?}"))),
                    })
                }
                "k" => {
                    nums.insert("groups", (line_no, value));
                }
                other => match NUMERIC.iter().find(|k| **k == other) {
                    Some(k) => {
                        nums.insert(k, (line_no, value));
                    }
                    None => {
                        return Err(Error::Parse {
                            line: line_no,
                            column: 1,
                            message: format!("unknown key {other:?}"),
                        })
                    }
                },
            }
        }

        fn get<T: FromStr>(
            nums: &std::collections::HashMap<&'static str, (u64, String)>,
            key: &str,
        ) -> Result<Option<T>>
        where
            T::Err: fmt::Display,
        {
            match nums.get(key) {
                None => Ok(None),
                Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                    line: *line,
                    column: 1,
                    message: format!("{key}: {e}"),
                }),
            }
        }
        let need = |what: &str| Error::InvalidInput(format!("scenario is missing `{what}`"));

        let q = get::<usize>(&nums, "q")?.ok_or_else(|| need("q"))?;
        let design = match design.ok_or_else(|| need("design"))? {
            "categorical" => Design::Categorical {
                n: get(&nums, "n")?.ok_or_else(|| need("n"))?,
                groups: get(&nums, "groups")?.ok_or_else(|| need("groups"))?,
                q,
            },
            _ => Design::Var2 {
                q,
                t: get(&nums, "t")?.ok_or_else(|| need("t"))?,
                burn_in: get(&nums, "burn_in")?.unwrap_or(DEFAULT_BURN_IN),
            },
        };
        let sigma = match sigma.ok_or_else(|| need("sigma"))? {
            "sparse" => SigmaKind::SparseOmega {
                rho: get(&nums, "rho")?.ok_or_else(|| need("rho"))?,
            },
            "diagonal" => SigmaKind::DiagonalOmega,
            _ => SigmaKind::DenseOmega,
        };
        let scenario = Scenario {
            name: name.unwrap_or_else(|| "scenario".into()),
            design,
            sigma,
            replications: get(&nums, "replications")?.ok_or_else(|| need("replications"))?,
            seed: get(&nums, "seed")?.unwrap_or(0),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
