//! The complete generative model: mark chain plus renewal kernels, the
//! sojourn mixture, the diffusive variance, and JSON (de)serialization.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{build_transition_matrix, ReturnChainSpec};
use crate::convolve::SojournCdf;
use crate::error::{Error, Result};
use crate::laws::RenewalLaw;

/// Renewal kernels: either sign-dependent (trend / mean-reverting) or a full
/// matrix indexed by (previous mark, next mark) in the fixed mark order.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernels {
    Symmetric { plus: RenewalLaw, minus: RenewalLaw },
    Full { laws: Vec<Vec<RenewalLaw>> },
}

/// Mark chain + sojourn kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct MrpModel {
    pub chain: ReturnChainSpec,
    pub kernels: Kernels,
}

impl MrpModel {
    pub fn new(chain: ReturnChainSpec, kernels: Kernels) -> Result<Self> {
        if let Kernels::Full { laws } = &kernels {
            let dim = 2 * chain.m();
            if laws.len() != dim || laws.iter().any(|r| r.len() != dim) {
                return Err(Error::validation(
                    "kernels",
                    format!("full kernel matrix must be {dim}x{dim}"),
                ));
            }
        }
        let model = MrpModel { chain, kernels };
        // every component law must have a finite mean for the mixture to
        // have one
        for law in model.component_laws() {
            let m = law.mean();
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::validation("kernels", "law with non-finite mean"));
            }
        }
        Ok(model)
    }

    /// Symmetric-kernel model with a symmetric chain.
    pub fn symmetric(alpha: f64, size_probs: Vec<f64>, plus: RenewalLaw, minus: RenewalLaw) -> Result<Self> {
        Self::new(
            ReturnChainSpec::symmetric(alpha, size_probs)?,
            Kernels::Symmetric { plus, minus },
        )
    }

    /// A renewal model: one mark-independent law (assumption-(H) form).
    pub fn renewal(alpha: f64, size_probs: Vec<f64>, law: RenewalLaw) -> Result<Self> {
        Self::new(
            ReturnChainSpec::symmetric(alpha, size_probs)?,
            Kernels::Symmetric { plus: law.clone(), minus: law },
        )
    }

    fn component_laws(&self) -> Vec<&RenewalLaw> {
        match &self.kernels {
            Kernels::Symmetric { plus, minus } => vec![plus, minus],
            Kernels::Full { laws } => laws.iter().flatten().collect(),
        }
    }

    /// Kernel for a transition from sign/mark i to j.
    pub fn kernel(&self, from: crate::chain::Mark, to: crate::chain::Mark) -> &RenewalLaw {
        match &self.kernels {
            Kernels::Symmetric { plus, minus } => {
                if from.sign() == to.sign() {
                    plus
                } else {
                    minus
                }
            }
            Kernels::Full { laws } => &laws[from.index()][to.index()],
        }
    }

    /// True when the sojourn law does not depend on the marks at all
    /// (assumption (H)(ii) verbatim).
    pub fn is_mark_independent(&self) -> bool {
        match &self.kernels {
            Kernels::Symmetric { plus, minus } => plus == minus,
            Kernels::Full { laws } => {
                let first = &laws[0][0];
                laws.iter().flatten().all(|l| l == first)
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.chain.is_symmetric() && matches!(self.kernels, Kernels::Symmetric { .. })
    }

    /// The sojourn mixture F = w+ F+ + w- F- of a symmetric model (the
    /// marginal sojourn law; weights (1 +- alpha)/2).
    pub fn mixture(&self) -> Result<MixtureF> {
        let alpha = self.chain.alpha()?;
        match &self.kernels {
            Kernels::Symmetric { plus, minus } => Ok(MixtureF {
                weight_plus: (1.0 + alpha) / 2.0,
                plus: plus.clone(),
                minus: minus.clone(),
            }),
            Kernels::Full { .. } => Err(Error::unsupported(
                "sojourn mixture requires symmetric (sign-dependent) kernels",
            )),
        }
    }

    /// Mean sojourn of the mixture.
    pub fn mean_sojourn(&self) -> Result<f64> {
        Ok(self.mixture()?.mean())
    }

    /// Diffusive variance, closed form (symmetric case):
    /// sigma^2 = (1/mean)(Var(xi) + (E xi)^2 (1+alpha)/(1-alpha)).
    pub fn macroscopic_variance(&self) -> Result<f64> {
        let alpha = self.chain.alpha()?;
        let mu = self.mean_sojourn()?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::domain(format!("mean sojourn must be finite positive, got {mu}")));
        }
        let exi = self.chain.mean_size();
        Ok((self.chain.var_size() + exi * exi * (1.0 + alpha) / (1.0 - alpha)) / mu)
    }

    /// Transition matrix of the embedded mark chain.
    pub fn transition_matrix(&self) -> crate::chain::TransitionMatrix {
        build_transition_matrix(&self.chain)
    }

    /// Short content hash of the canonical JSON encoding (provenance field
    /// in batch metadata).
    pub fn content_hash(&self) -> String {
        let doc = ModelDocument::from_model(self);
        let bytes = serde_json::to_vec(&doc).expect("model serializes");
        // FNV-1a 64-bit
        let mut h: u64 = 0xcbf29ce484222325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Two-component sojourn mixture of a symmetric model.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureF {
    pub weight_plus: f64,
    pub plus: RenewalLaw,
    pub minus: RenewalLaw,
}

impl MixtureF {
    pub fn weight_minus(&self) -> f64 {
        1.0 - self.weight_plus
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        Ok(self.weight_plus * self.plus.pdf(t)? + self.weight_minus() * self.minus.pdf(t)?)
    }

    pub fn mean(&self) -> f64 {
        self.weight_plus * self.plus.mean() + self.weight_minus() * self.minus.mean()
    }

    pub fn second_moment(&self) -> f64 {
        let m2 = |l: &RenewalLaw| l.variance() + l.mean() * l.mean();
        self.weight_plus * m2(&self.plus) + self.weight_minus() * m2(&self.minus)
    }

    pub fn partial_moment1(&self, t: f64) -> f64 {
        self.weight_plus * self.plus.partial_moment1(t)
            + self.weight_minus() * self.minus.partial_moment1(t)
    }

    /// Draw from the mixture (component pick, then the component law).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.gen::<f64>() < self.weight_plus {
            self.plus.sample(rng)
        } else {
            self.minus.sample(rng)
        }
    }
}

impl SojournCdf for MixtureF {
    fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.weight_plus * self.plus.cdf_unchecked(t)
            + self.weight_minus() * self.minus.cdf_unchecked(t)
    }
    fn mean(&self) -> f64 {
        MixtureF::mean(self)
    }
}

// ---------------------------------------------------------------------------
// JSON document schema
// ---------------------------------------------------------------------------

/// Law as written in model JSON; `empirical` references a sample file which
/// is resolved relative to the model file when loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LawSpec {
    Gamma { shape: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Empirical {
        sample_path: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        bandwidth: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelsDocument {
    Symmetric { plus: LawSpec, minus: LawSpec },
    Full { laws: Vec<Vec<LawSpec>> },
}

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub size_probs: Vec<f64>,
    pub kernels: KernelsDocument,
}

impl ModelDocument {
    pub fn from_model(model: &MrpModel) -> Self {
        let law_to_spec = |l: &RenewalLaw| match l {
            RenewalLaw::Gamma { shape, scale } => LawSpec::Gamma { shape: *shape, scale: *scale },
            RenewalLaw::Weibull { shape, scale } => {
                LawSpec::Weibull { shape: *shape, scale: *scale }
            }
            RenewalLaw::Exponential { rate } => LawSpec::Exponential { rate: *rate },
            RenewalLaw::Empirical { bandwidth, .. } => LawSpec::Empirical {
                sample_path: "<inline>".to_string(),
                bandwidth: Some(*bandwidth),
            },
        };
        let kernels = match &model.kernels {
            Kernels::Symmetric { plus, minus } => KernelsDocument::Symmetric {
                plus: law_to_spec(plus),
                minus: law_to_spec(minus),
            },
            Kernels::Full { laws } => KernelsDocument::Full {
                laws: laws.iter().map(|r| r.iter().map(law_to_spec).collect()).collect(),
            },
        };
        ModelDocument {
            alpha_plus: model.chain.alpha_plus,
            alpha_minus: model.chain.alpha_minus,
            size_probs: model.chain.size_probs.clone(),
            kernels,
        }
    }

    /// Resolve into a runtime model; `base_dir` anchors empirical sample
    /// paths.
    pub fn into_model(self, base_dir: &Path) -> Result<MrpModel> {
        let resolve = |spec: &LawSpec| -> Result<RenewalLaw> {
            match spec {
                LawSpec::Gamma { shape, scale } => RenewalLaw::gamma(*shape, *scale),
                LawSpec::Weibull { shape, scale } => RenewalLaw::weibull(*shape, *scale),
                LawSpec::Exponential { rate } => RenewalLaw::exponential(*rate),
                LawSpec::Empirical { sample_path, bandwidth } => {
                    let path = base_dir.join(sample_path);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Error::validation(
                            "sample_path",
                            format!("cannot read {}: {e}", path.display()),
                        )
                    })?;
                    let mut samples = Vec::new();
                    for (ln, line) in text.lines().enumerate() {
                        let line = line.trim();
                        if line.is_empty() {
                            continue;
                        }
                        samples.push(line.parse::<f64>().map_err(|e| Error::Parse {
                            line: ln + 1,
                            msg: format!("bad sample value {line:?}: {e}"),
                        })?);
                    }
                    RenewalLaw::empirical(samples, *bandwidth)
                }
            }
        };
        let chain = ReturnChainSpec::new(self.alpha_plus, self.alpha_minus, self.size_probs)?;
        let kernels = match &self.kernels {
            KernelsDocument::Symmetric { plus, minus } => Kernels::Symmetric {
                plus: resolve(plus)?,
                minus: resolve(minus)?,
            },
            KernelsDocument::Full { laws } => Kernels::Full {
                laws: laws
                    .iter()
                    .map(|r| r.iter().map(resolve).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            },
        };
        MrpModel::new(chain, kernels)
    }
}

/// Load a model JSON file.
pub fn load_model(path: &Path) -> Result<MrpModel> {
    let text = std::fs::read_to_string(path)?;
    let doc: ModelDocument = serde_json::from_str(&text)?;
    doc.into_model(path.parent().unwrap_or(Path::new(".")))
}

/// Save a model as JSON.
pub fn save_model(model: &MrpModel, path: &Path) -> Result<()> {
    let doc = ModelDocument::from_model(model);
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// The Table-2 regime used throughout tests: alpha = -0.875 with the
/// trend/mean-reverting Gamma pair.
pub fn table2_model() -> MrpModel {
    MrpModel::symmetric(
        -0.875,
        vec![1.0],
        RenewalLaw::gamma(0.276225, 2397.219).unwrap(),
        RenewalLaw::gamma(0.07132677, 1561.593).unwrap(),
    )
    .unwrap()
}
