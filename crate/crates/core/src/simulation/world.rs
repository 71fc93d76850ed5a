use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::numeric::{derive_seed, mean, sample_sd};

/// How the response is computed from the predictor fields `x0, x1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResponseRecipe {
    /// `y = x[index]`.
    Predictor { index: usize },
    /// `y = x0 + 0.8·x1 + 0.6·x0·x2 + sin(1.5·x3) + 0.8·[x4 > 0]`, with
    /// indices taken modulo `p`. Remaining predictors carry no signal.
    #[default]
    Standard,
}

impl ResponseRecipe {
    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            ResponseRecipe::Predictor { index } => x[index],
            ResponseRecipe::Standard => {
                let v = |j: usize| x[j % x.len()];
                let step = if v(4) > 0.0 { 0.8 } else { 0.0 };
                v(0) + 0.8 * v(1) + 0.6 * v(0) * v(2) + (1.5 * v(3)).sin() + step
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub nx: usize,
    pub ny: usize,
    pub p: usize,
    /// Half-width in cells of the square moving-average kernel; 0 leaves
    /// white noise.
    pub corr_length: usize,
    /// Amplitude of a linear gradient added to every predictor field, in
    /// units of the field's standard deviation. Predictor `j` ramps from
    /// `-trend` to `+trend` along its own fixed direction.
    pub trend: f64,
    pub recipe: ResponseRecipe,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            nx: 100,
            ny: 100,
            p: 8,
            corr_length: 10,
            trend: 3.0,
            recipe: ResponseRecipe::Standard,
            noise_sd: 0.3,
            seed: 1,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.nx < 10 || self.ny < 10 {
            return bad(format!(
                "grid {}×{} is smaller than 10×10",
                self.nx, self.ny
            ));
        }
        if self.p < 2 {
            return bad(format!("p = {}; at least 2 predictors required", self.p));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!(
                "noise sd must be finite and nonnegative, got {}",
                self.noise_sd
            ));
        }
        if !self.trend.is_finite() {
            return bad("trend must be finite".into());
        }
        if let ResponseRecipe::Predictor { index } = self.recipe {
            if index >= self.p {
                return bad(format!("recipe uses predictor {index} but p = {}", self.p));
            }
        }
        Ok(())
    }

    pub fn predictor_names(&self) -> Vec<String> {
        (0..self.p).map(|j| format!("x{j}")).collect()
    }
}

/// A fixed synthetic truth: one cell per grid position with all predictor
/// values and the true response.
#[derive(Debug, Clone)]
pub struct World {
    pub spec: WorldSpec,
    pub grid: PointSet,
}

impl World {
    pub fn cell(&self, ix: usize, iy: usize) -> usize {
        iy * self.spec.nx + ix
    }

    /// Grid position of cell `c` (row-major, x fastest).
    pub fn position(&self, c: usize) -> (usize, usize) {
        (c % self.spec.nx, c / self.spec.nx)
    }
}

/// Cells are unit squares; cell `(ix, iy)` has id `iy·nx + ix` and centre
/// `(ix + 0.5, iy + 0.5)`.
pub fn generate_world(spec: &WorldSpec) -> Result<World> {
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let cells = nx * ny;
    let fields: Vec<Vec<f64>> = (0..spec.p)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[j as u64]));
            let mut f = smoothed_noise(nx, ny, spec.corr_length, &mut rng);
            standardise(&mut f);
            add_trend(&mut f, nx, ny, j, spec.trend);
            f
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[spec.p as u64]));
    let mut predictors = Vec::with_capacity(cells * spec.p);
    let mut response = Vec::with_capacity(cells);
    let mut row = vec![0.0; spec.p];
    for c in 0..cells {
        for (j, f) in fields.iter().enumerate() {
            row[j] = f[c];
        }
        predictors.extend_from_slice(&row);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let noise = if spec.noise_sd > 0.0 {
            spec.noise_sd * eps
        } else {
            0.0
        };
        response.push(spec.recipe.evaluate(&row) + noise);
    }
    let coords = (0..cells)
        .map(|c| [(c % nx) as f64 + 0.5, (c / nx) as f64 + 0.5])
        .collect();
    let grid = PointSet::new(
        (0..cells as i64).collect(),
        coords,
        spec.predictor_names(),
        predictors,
        Some(response),
    )?;
    Ok(World {
        spec: spec.clone(),
        grid,
    })
}

/// White noise on a grid padded by `r` cells, averaged over a
/// `(2r+1)×(2r+1)` window; returns the `nx × ny` interior row-major.
fn smoothed_noise(nx: usize, ny: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (px, py) = (nx + 2 * r, ny + 2 * r);
    let noise: Vec<f64> = (0..px * py)
        .map(|_| StandardNormal.sample(&mut *rng))
        .collect();
    let w = 2 * r + 1;
    // horizontal pass: px × py → nx × py
    let mut h = vec![0.0; nx * py];
    for y in 0..py {
        let src = &noise[y * px..(y + 1) * px];
        for x in 0..nx {
            h[y * nx + x] = src[x..x + w].iter().sum::<f64>();
        }
    }
    // vertical pass: nx × py → nx × ny
    let mut out = vec![0.0; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            out[y * nx + x] = (y..y + w).map(|yy| h[yy * nx + x]).sum::<f64>() / (w * w) as f64;
        }
    }
    out
}

fn standardise(f: &mut [f64]) {
    let m = mean(f);
    let sd = sample_sd(f);
    for v in f.iter_mut() {
        *v = (*v - m) / sd;
    }
}

/// Adds `trend · (u·d_j)` where `u` is the centred cell position scaled so
/// the projection spans `[-1, 1]`, and `d_j` turns by the golden angle per
/// predictor.
fn add_trend(f: &mut [f64], nx: usize, ny: usize, j: usize, trend: f64) {
    if trend == 0.0 {
        return;
    }
    let angle = j as f64 * 2.399_963_229_728_653;
    let (dx, dy) = (angle.cos(), angle.sin());
    let half = |n: usize| (n as f64 - 1.0) / 2.0;
    let span = (half(nx) * dx.abs() + half(ny) * dy.abs()).max(f64::MIN_POSITIVE);
    for (c, v) in f.iter_mut().enumerate() {
        let (x, y) = ((c % nx) as f64 - half(nx), (c / nx) as f64 - half(ny));
        *v += trend * (x * dx + y * dy) / span;
    }
}
