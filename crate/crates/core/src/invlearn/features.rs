use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which desired-output and past-reference samples feed the inverse model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSelection {
    /// `y(k-n+r ..= k+r)` and `u(k-n+r ..= k-1)`.
    ExactInverse { n: usize, r: usize },
    /// `y(k ..= k+n)`.
    ApproxInverse { n: usize },
    /// `y(k+r)`.
    Naive { r: usize },
    /// `y(k ..= k+n)` and `u(k-past ..= k-1)`.
    AugmentedPast { n: usize, past: usize },
}

impl InputSelection {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InputSelection::ExactInverse { n, r } if r > n => Err(Error::invalid(format!(
                "exact inverse needs r <= n, got n = {n}, r = {r}"
            ))),
            InputSelection::AugmentedPast { past: 0, .. } => Err(Error::invalid(
                "augmented selection needs at least one past reference",
            )),
            _ => Ok(()),
        }
    }

    /// Offsets of desired-output samples relative to `k`, ascending.
    pub fn y_offsets(&self) -> Vec<isize> {
        match *self {
            InputSelection::ExactInverse { n, r } => {
                (r as isize - n as isize..=r as isize).collect()
            }
            InputSelection::ApproxInverse { n } | InputSelection::AugmentedPast { n, .. } => {
                (0..=n as isize).collect()
            }
            InputSelection::Naive { r } => vec![r as isize],
        }
    }

    /// Offsets of past reference samples relative to `k`, ascending and negative.
    pub fn u_offsets(&self) -> Vec<isize> {
        match *self {
            InputSelection::ExactInverse { n, r } => (r as isize - n as isize..0).collect(),
            InputSelection::AugmentedPast { past, .. } => (-(past as isize)..0).collect(),
            _ => Vec::new(),
        }
    }

    /// True when the model sees its own past outputs.
    pub fn is_recursive(&self) -> bool {
        !self.u_offsets().is_empty()
    }
}

/// How a window of samples is turned into network inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// Samples as they are; label `u(k)`.
    #[default]
    Raw,
    /// Samples relative to `y(k)` (velocities relative to `v(k)`); label `u(k) - y(k)`.
    Offsets,
    /// Forward differences of the output window; past references raw; label `u(k)`.
    FiniteDifference,
}

/// Full description of the feature map, stored with every generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub selection: InputSelection,
    #[serde(default)]
    pub encoding: FeatureEncoding,
    /// Adds a velocity window over all but the last output offset.
    #[serde(default)]
    pub velocity: bool,
}

fn at(name: &str, i: isize) -> String {
    match i {
        0 => format!("{name}(k)"),
        i if i > 0 => format!("{name}(k+{i})"),
        i => format!("{name}(k{i})"),
    }
}

/// Forward differences `D^j w(0)` for `j = 0..w.len()`.
fn forward_differences(w: &[f64]) -> Vec<f64> {
    let mut cur = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    while !cur.is_empty() {
        out.push(cur[0]);
        cur = cur.windows(2).map(|p| p[1] - p[0]).collect();
    }
    out
}

impl FeatureSpec {
    pub fn new(selection: InputSelection) -> Self {
        FeatureSpec {
            selection,
            encoding: FeatureEncoding::Raw,
            velocity: false,
        }
    }

    pub fn with_encoding(mut self, encoding: FeatureEncoding) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn with_velocity(mut self, velocity: bool) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.selection.validate()?;
        if self.feature_count() == 0 {
            return Err(Error::invalid("feature map produces no inputs"));
        }
        Ok(())
    }

    pub fn y_offsets(&self) -> Vec<isize> {
        self.selection.y_offsets()
    }

    pub fn u_offsets(&self) -> Vec<isize> {
        self.selection.u_offsets()
    }

    pub fn v_offsets(&self) -> Vec<isize> {
        if !self.velocity {
            return Vec::new();
        }
        let mut y = self.y_offsets();
        y.pop();
        y
    }

    /// Smallest and largest offset touched by any channel.
    pub fn span(&self) -> (isize, isize) {
        let all = self.y_offsets().into_iter().chain(self.u_offsets());
        let (lo, hi) = all.fold((0, 0), |(lo, hi), i| (lo.min(i), hi.max(i)));
        (lo, hi)
    }

    fn channel_names(&self, name: &str, offsets: &[isize]) -> Vec<String> {
        match self.encoding {
            FeatureEncoding::Raw => offsets.iter().map(|&i| at(name, i)).collect(),
            FeatureEncoding::Offsets => offsets
                .iter()
                .filter(|&&i| i != 0)
                .map(|&i| format!("{}-{}", at(name, i), at(name, 0)))
                .collect(),
            FeatureEncoding::FiniteDifference => (0..offsets.len())
                .map(|j| match j {
                    0 => at(name, offsets[0]),
                    j => format!("D{j}{}", at(name, offsets[0])),
                })
                .collect(),
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.channel_names("y", &self.y_offsets());
        names.extend(self.channel_names("v", &self.v_offsets()));
        for i in self.u_offsets() {
            names.push(match self.encoding {
                FeatureEncoding::Offsets => format!("{}-y(k)", at("u", i)),
                _ => at("u", i),
            });
        }
        names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names().len()
    }

    pub fn label_name(&self) -> &'static str {
        match self.encoding {
            FeatureEncoding::Offsets => "u(k)-y(k)",
            _ => "u(k)",
        }
    }

    fn encode_channel(&self, get: &dyn Fn(isize) -> f64, offsets: &[isize], out: &mut Vec<f64>) {
        if offsets.is_empty() {
            return;
        }
        match self.encoding {
            FeatureEncoding::Raw => out.extend(offsets.iter().map(|&i| get(i))),
            FeatureEncoding::Offsets => {
                let base = get(0);
                out.extend(offsets.iter().filter(|&&i| i != 0).map(|&i| get(i) - base));
            }
            FeatureEncoding::FiniteDifference => {
                let w: Vec<f64> = offsets.iter().map(|&i| get(i)).collect();
                out.extend(forward_differences(&w));
            }
        }
    }

    /// Feature row for time `k`; the closures take offsets relative to `k`.
    pub fn encode(
        &self,
        y: &dyn Fn(isize) -> f64,
        v: &dyn Fn(isize) -> f64,
        u: &dyn Fn(isize) -> f64,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_count());
        self.encode_channel(y, &self.y_offsets(), &mut out);
        self.encode_channel(v, &self.v_offsets(), &mut out);
        let base = y(0);
        for i in self.u_offsets() {
            out.push(match self.encoding {
                FeatureEncoding::Offsets => u(i) - base,
                _ => u(i),
            });
        }
        out
    }

    pub fn label(&self, u_k: f64, y_k: f64) -> f64 {
        match self.encoding {
            FeatureEncoding::Offsets => u_k - y_k,
            _ => u_k,
        }
    }

    /// Inverse of `label`: the reference from a network output.
    pub fn decode(&self, out: f64, y_k: f64) -> f64 {
        match self.encoding {
            FeatureEncoding::Offsets => out + y_k,
            _ => out,
        }
    }

    /// Per-feature magnitude bounds when `|y| <= b` and `|v| <= vb`. Past
    /// reference features are unbounded a priori and reported as infinite.
    pub fn feature_bounds(&self, b: f64, vb: f64) -> Vec<f64> {
        let channel = |bound: f64, offsets: &[isize]| -> Vec<f64> {
            match self.encoding {
                FeatureEncoding::Raw => vec![bound; offsets.len()],
                FeatureEncoding::Offsets => {
                    vec![2.0 * bound; offsets.iter().filter(|&&i| i != 0).count()]
                }
                FeatureEncoding::FiniteDifference => (0..offsets.len())
                    .map(|j| bound * 2f64.powi(j as i32))
                    .collect(),
            }
        };
        let mut out = channel(b, &self.y_offsets());
        out.extend(channel(vb, &self.v_offsets()));
        out.extend(self.u_offsets().iter().map(|_| f64::INFINITY));
        out
    }
}
