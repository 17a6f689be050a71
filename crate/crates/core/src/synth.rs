//! Synthetic datasets with known dependence structure.
//!
//! Every generator is a pure function of its [`ScenarioSpec`]. Independent
//! blocks of draws come from separate streams derived from the scenario seed, so
//! changing one parameter (say the noise level) leaves the other draws
//! untouched.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub const DEFAULT_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseDistribution {
    /// Normal with mean 0 and standard deviation π.
    Gaussian,
    /// Uniform on [-π, π].
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrigCase {
    /// Second dataset drawn independently.
    A,
    /// Two of four coordinates bound by trigonometric maps.
    B,
    /// All four coordinates bound.
    C,
}

/// Reuse of one pre-rotation Gaussian series from another rotated-Gaussian
/// generation: column 0 here takes the draws of `column` under `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedSeries {
    pub seed: RngSeed,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    Linear2d,
    Random2d,
    Spiral2d {
        turns: f64,
    },
    Trig4d {
        case: TrigCase,
        base: BaseDistribution,
        noise_sigma: f64,
    },
    Cylinder3d,
    RotatedGaussian {
        d_intrinsic: usize,
        d_embed: usize,
        shared: Option<SharedSeries>,
    },
    /// Gaussian mixture with `classes` equally sized, labeled clusters in 2-D
    /// and a second dataset bound to the first through class-dependent
    /// trigonometric maps.
    Clusters {
        classes: usize,
    },
}

impl Scenario {
    pub fn spiral() -> Self {
        Scenario::Spiral2d { turns: 3.0 }
    }

    pub fn trig(case: TrigCase, base: BaseDistribution) -> Self {
        Scenario::Trig4d {
            case,
            base,
            noise_sigma: 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Linear2d => "linear2d",
            Scenario::Random2d => "random2d",
            Scenario::Spiral2d { .. } => "spiral2d",
            Scenario::Trig4d {
                case: TrigCase::A, ..
            } => "trig4d_A",
            Scenario::Trig4d {
                case: TrigCase::B, ..
            } => "trig4d_B",
            Scenario::Trig4d {
                case: TrigCase::C, ..
            } => "trig4d_C",
            Scenario::Cylinder3d => "cylinder3d",
            Scenario::RotatedGaussian { .. } => "rotated_gaussian",
            Scenario::Clusters { .. } => "clusters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: RngSeed,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario,
            n,
            seed: RngSeed(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidParameter(format!(
                "n = {} is below the minimum of 10",
                self.n
            )));
        }
        match self.scenario {
            Scenario::Spiral2d { turns } if !(turns > 0.0 && turns.is_finite()) => Err(
                Error::InvalidParameter(format!("spiral turns {turns} must be positive")),
            ),
            Scenario::Trig4d { noise_sigma, .. }
                if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) =>
            {
                Err(Error::InvalidParameter(format!(
                    "noise sigma {noise_sigma} must be >= 0"
                )))
            }
            Scenario::RotatedGaussian {
                d_intrinsic,
                d_embed,
                ..
            } if d_intrinsic == 0 || d_intrinsic > d_embed => Err(Error::InvalidParameter(
                format!("need 1 <= d_intrinsic ({d_intrinsic}) <= d_embed ({d_embed})"),
            )),
            Scenario::Clusters { classes } if classes == 0 || classes > self.n => {
                Err(Error::InvalidParameter(format!(
                    "cannot split {} rows into {classes} classes",
                    self.n
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Generator output: one dataset, or a row-aligned pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub x: DataMatrix,
    pub y: Option<DataMatrix>,
}

fn normal_column(n: usize, seed: RngSeed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn base_draws(n: usize, cols: usize, base: BaseDistribution, seed: RngSeed) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let mut cols_out = vec![Vec::with_capacity(n); cols];
    let uniform = Uniform::new_inclusive(-PI, PI).unwrap();
    let gauss = Normal::new(0.0, PI).unwrap();
    for _ in 0..n {
        for c in cols_out.iter_mut() {
            c.push(match base {
                BaseDistribution::Gaussian => gauss.sample(&mut rng),
                BaseDistribution::Uniform => uniform.sample(&mut rng),
            });
        }
    }
    cols_out
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal(dim: usize, seed: RngSeed) -> DMatrix<f64> {
    let mut rng = seed.rng();
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn spiral(n: usize, turns: f64, seed: RngSeed) -> Result<Generated> {
    let mut rng = seed.rng();
    let span = 2.0 * PI * turns;
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let theta = rng.random_range(0.0..span);
        let r = theta / span;
        xs.push(r * theta.cos());
        ys.push(r * theta.sin());
    }
    Ok(Generated {
        x: DataMatrix::new(n, 1, xs)?,
        y: Some(DataMatrix::new(n, 1, ys)?),
    })
}

fn trig(
    n: usize,
    case: TrigCase,
    base: BaseDistribution,
    noise_sigma: f64,
    seed: RngSeed,
) -> Result<Generated> {
    let first = base_draws(n, 4, base, seed.derive(0));
    let fresh = base_draws(n, 4, base, seed.derive(1));
    let (w, x, y, z) = (&first[0], &first[1], &first[2], &first[3]);
    let mut second: Vec<Vec<f64>> = match case {
        TrigCase::A => fresh,
        TrigCase::B => vec![
            (0..n).map(|i| (w[i] + y[i]).cos()).collect(),
            x.iter().map(|v| v.sin()).collect(),
            fresh[2].clone(),
            fresh[3].clone(),
        ],
        TrigCase::C => vec![
            (0..n).map(|i| (w[i] + y[i]).cos()).collect(),
            x.iter().map(|v| v.sin()).collect(),
            (0..n).map(|i| (x[i] * z[i]).sin()).collect(),
            y.iter().map(|v| v.cos()).collect(),
        ],
    };
    if noise_sigma > 0.0 {
        let mut rng = seed.derive(2).rng();
        let noise = Normal::new(0.0, noise_sigma).unwrap();
        for i in 0..n {
            for c in second.iter_mut() {
                c[i] += noise.sample(&mut rng);
            }
        }
    }
    Ok(Generated {
        x: DataMatrix::from_columns(&first)?,
        y: Some(DataMatrix::from_columns(&second)?),
    })
}

fn cylinder(n: usize, seed: RngSeed) -> Result<Generated> {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(n * 3);
    for _ in 0..n {
        let phi = rng.random_range(0.0..2.0 * PI);
        let h = rng.random_range(-1.0..1.0);
        // The circle lies in the x-z plane; y runs along the axis.
        values.extend_from_slice(&[phi.cos(), h, phi.sin()]);
    }
    Ok(Generated {
        x: DataMatrix::new(n, 3, values)?,
        y: None,
    })
}

/// Seed of the stream holding pre-rotation column `column`.
fn series_seed(seed: RngSeed, column: usize) -> RngSeed {
    seed.derive(column as u64)
}

fn rotated_gaussian(
    n: usize,
    d_intrinsic: usize,
    d_embed: usize,
    shared: Option<SharedSeries>,
    seed: RngSeed,
) -> Result<Generated> {
    let cols: Vec<Vec<f64>> = (0..d_intrinsic)
        .map(|j| match shared {
            Some(s) if j == 0 => normal_column(n, series_seed(s.seed, s.column)),
            _ => normal_column(n, series_seed(seed, j)),
        })
        .collect();
    let q = random_orthogonal(d_embed, seed.derive(u64::MAX));
    let mut values = Vec::with_capacity(n * d_embed);
    for i in 0..n {
        for c in 0..d_embed {
            values.push((0..d_intrinsic).map(|j| cols[j][i] * q[(j, c)]).sum());
        }
    }
    Ok(Generated {
        x: DataMatrix::new(n, d_embed, values)?,
        y: None,
    })
}

const CLUSTER_SPREAD: f64 = 3.0;

/// X: a 2-D Gaussian mixture. Y: each class lies on its own line through the
/// origin at angle `pi c / classes`; the position along it is a trig function
/// of the point's offset from its cluster center.
///
/// The lines only separate away from the origin, so pairs that keep the class
/// see one line per cluster while freely shuffled pairs see all of them.
fn clusters(n: usize, classes: usize, seed: RngSeed) -> Result<Generated> {
    let mut rng = seed.derive(0).rng();
    let centers: Vec<[f64; 2]> = (0..classes)
        .map(|_| {
            std::array::from_fn(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                CLUSTER_SPREAD * e
            })
        })
        .collect();
    let phases: Vec<f64> = (0..classes)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let mut rng = seed.derive(1).rng();
    let labels: Vec<i64> = (0..n).map(|i| (i % classes) as i64).collect();
    let (mut xv, mut yv) = (Vec::with_capacity(n * 2), Vec::with_capacity(n * 2));
    for &l in &labels {
        let (c, ph) = (centers[l as usize], phases[l as usize]);
        let e: [f64; 2] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        xv.extend([c[0] + e[0], c[1] + e[1]]);
        let t = (e[0] + ph).sin() + (e[1] - ph).cos();
        let angle = PI * l as f64 / classes as f64;
        yv.extend([t * angle.cos(), t * angle.sin()]);
    }
    Ok(Generated {
        x: DataMatrix::new(n, 2, xv)?.with_labels(labels.clone())?,
        y: Some(DataMatrix::new(n, 2, yv)?.with_labels(labels)?),
    })
}

pub fn generate(spec: &ScenarioSpec) -> Result<Generated> {
    spec.validate()?;
    let (n, seed) = (spec.n, spec.seed);
    match spec.scenario {
        Scenario::Linear2d => {
            let x = normal_column(n, seed);
            Ok(Generated {
                x: DataMatrix::new(n, 1, x.clone())?,
                y: Some(DataMatrix::new(n, 1, x)?),
            })
        }
        Scenario::Random2d => Ok(Generated {
            x: DataMatrix::new(n, 1, normal_column(n, seed.derive(0)))?,
            y: Some(DataMatrix::new(n, 1, normal_column(n, seed.derive(1)))?),
        }),
        Scenario::Spiral2d { turns } => spiral(n, turns, seed),
        Scenario::Trig4d {
            case,
            base,
            noise_sigma,
        } => trig(n, case, base, noise_sigma, seed),
        Scenario::Cylinder3d => cylinder(n, seed),
        Scenario::RotatedGaussian {
            d_intrinsic,
            d_embed,
            shared,
        } => rotated_gaussian(n, d_intrinsic, d_embed, shared, seed),
        Scenario::Clusters { classes } => clusters(n, classes, seed),
    }
}

/// Human-readable provenance for sidecar files.
pub fn describe(spec: &ScenarioSpec) -> String {
    let mut s = format!(
        "dataset: {}\nn: {}\nseed: {}\n",
        spec.scenario.name(),
        spec.n,
        spec.seed.0
    );
    let body = match spec.scenario {
        Scenario::Linear2d => "x ~ N(0, 1); y = x\noutputs: X = [x], Y = [y]\n".to_string(),
        Scenario::Random2d => "x, y ~ N(0, 1) independent\noutputs: X = [x], Y = [y]\n".into(),
        Scenario::Spiral2d { turns } => format!(
            "Archimedean spiral, {turns} turns\ntheta ~ U(0, 2*pi*{turns}); r = theta / (2*pi*{turns})\n\
             x = r cos(theta); y = r sin(theta)\noutputs: X = [x], Y = [y]\n"
        ),
        Scenario::Trig4d {
            case,
            base,
            noise_sigma,
        } => {
            let mut b = String::new();
            let base_txt = match base {
                BaseDistribution::Gaussian => "N(0, pi^2)",
                BaseDistribution::Uniform => "U(-pi, pi)",
            };
            let _ = writeln!(b, "X = [w, x, y, z], i.i.d. {base_txt}");
            let binding = match case {
                TrigCase::A => "w', x', y', z' i.i.d. from the same base (independent)",
                TrigCase::B => "w' = cos(w + y); x' = sin(x); y', z' i.i.d. from the same base",
                TrigCase::C => "w' = cos(w + y); x' = sin(x); y' = sin(x z); z' = cos(y)",
            };
            let _ = writeln!(b, "Y = [w', x', y', z']: {binding}");
            if noise_sigma > 0.0 {
                let _ = writeln!(b, "Y entries perturbed by N(0, {noise_sigma}^2)");
            }
            b
        }
        Scenario::Cylinder3d => "phi ~ U(0, 2 pi); h ~ U(-1, 1)\n\
             x = cos(phi) (circle), y = h (cylinder axis), z = sin(phi) (circle)\n\
             outputs: X = [x, y, z]\n"
            .into(),
        Scenario::RotatedGaussian {
            d_intrinsic,
            d_embed,
            shared,
        } => {
            let mut b = format!(
                "{d_intrinsic} i.i.d. N(0, 1) series, zero-padded to {d_embed} columns, \
                 rotated by a Haar-random orthogonal matrix\n"
            );
            if let Some(s) = shared {
                let _ = writeln!(
                    b,
                    "series 0 shared with series {} of seed {}",
                    s.column, s.seed.0
                );
            }
            b
        }
        Scenario::Clusters { classes } => format!(
            "{classes} labeled Gaussian clusters in 2-D (unit spread, centers ~ N(0, 9))\n\
             Y = t (cos a_c, sin a_c), t = sin(e1 + p_c) + cos(e2 - p_c), a_c = pi c / {classes}\n\
             e = offset from the cluster center, p_c = class phase\n"
        ),
    };
    s.push_str(&body);
    s
}
