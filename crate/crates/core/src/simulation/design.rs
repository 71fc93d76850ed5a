use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{Error, Result};
use crate::geometry::PointSet;

fn default_attractors() -> usize {
    5
}
fn default_attractor_sd() -> f64 {
    6.0
}
fn default_biased_fraction() -> f64 {
    0.5
}
fn default_parents() -> usize {
    10
}
fn default_child_sd() -> f64 {
    3.0
}
fn default_split() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "kebab-case")]
pub enum Design {
    /// Uniform over the grid, without replacement.
    Random,
    /// `fraction` of the points Gaussian around `attractors` random cells,
    /// the rest uniform.
    Biased {
        #[serde(default = "default_attractors")]
        attractors: usize,
        #[serde(default = "default_attractor_sd")]
        attractor_sd: f64,
        #[serde(default = "default_biased_fraction")]
        fraction: f64,
    },
    /// `parents` uniform cells, children Gaussian-offset around them.
    Clustered {
        #[serde(default = "default_parents")]
        parents: usize,
        #[serde(default = "default_child_sd")]
        child_sd: f64,
    },
    /// Training uniform over cells with `x < split·nx`; the prediction
    /// domain is every other cell.
    Extrapolation {
        #[serde(default = "default_split")]
        split: f64,
    },
}

impl Design {
    pub fn biased() -> Self {
        Design::Biased {
            attractors: default_attractors(),
            attractor_sd: default_attractor_sd(),
            fraction: default_biased_fraction(),
        }
    }

    pub fn clustered() -> Self {
        Design::Clustered {
            parents: default_parents(),
            child_sd: default_child_sd(),
        }
    }

    pub fn extrapolation() -> Self {
        Design::Extrapolation {
            split: default_split(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Design::Random => "random",
            Design::Biased { .. } => "biased",
            Design::Clustered { .. } => "clustered",
            Design::Extrapolation { .. } => "extrapolation",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub design: Design,
    pub n: usize,
    /// Used by [`sample_design`] directly; experiments derive their own.
    #[serde(default)]
    pub seed: u64,
}

impl DesignSpec {
    pub fn new(design: Design, n: usize) -> Self {
        Self { design, n, seed: 0 }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 2 {
            return bad(format!("design sample size {} is below 2", self.n));
        }
        match self.design {
            Design::Random => {}
            Design::Biased {
                attractors,
                attractor_sd,
                fraction,
            } => {
                if attractors < 1 || !(attractor_sd > 0.0) || !(0.0..=1.0).contains(&fraction) {
                    return bad(
                        "biased design needs attractors ≥ 1, attractor_sd > 0, fraction in [0, 1]"
                            .into(),
                    );
                }
            }
            Design::Clustered { parents, child_sd } => {
                if parents < 1 || !(child_sd > 0.0) {
                    return bad("clustered design needs parents ≥ 1 and child_sd > 0".into());
                }
            }
            Design::Extrapolation { split } => {
                if !(split > 0.0 && split < 1.0) {
                    return bad(format!("extrapolation split {split} outside (0, 1)"));
                }
            }
        }
        Ok(())
    }
}

/// Training sample (with true responses) and the prediction domain.
#[derive(Debug, Clone)]
pub struct Sample {
    pub train: PointSet,
    pub domain: PointSet,
    /// Grid cell index of each training point.
    pub train_cells: Vec<usize>,
    /// Grid cell index of each prediction-domain point.
    pub domain_cells: Vec<usize>,
}

pub fn sample_design(world: &World, spec: &DesignSpec) -> Result<Sample> {
    spec.validate()?;
    let (nx, ny) = (world.spec.nx, world.spec.ny);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let all: Vec<usize> = (0..nx * ny).collect();
    let (train_cells, domain_cells) = match spec.design {
        Design::Random => (uniform(&all, spec.n, &mut rng)?, all),
        Design::Biased {
            attractors,
            attractor_sd,
            fraction,
        } => {
            let n_near = (fraction * spec.n as f64).round() as usize;
            let centres = uniform(&all, attractors.min(all.len()), &mut rng)?;
            let mut taken = HashSet::new();
            let mut cells = gaussian_children(
                world,
                &centres,
                n_near,
                attractor_sd,
                &mut taken,
                true,
                &mut rng,
            )?;
            let rest: Vec<usize> = all.iter().copied().filter(|c| !taken.contains(c)).collect();
            cells.extend(uniform(&rest, spec.n - n_near, &mut rng)?);
            (cells, all)
        }
        Design::Clustered { parents, child_sd } => {
            let centres = uniform(&all, parents.min(all.len()), &mut rng)?;
            let mut taken = HashSet::new();
            let cells = gaussian_children(
                world, &centres, spec.n, child_sd, &mut taken, false, &mut rng,
            )?;
            (cells, all)
        }
        Design::Extrapolation { split } => {
            let limit = split * nx as f64;
            let (left, right): (Vec<usize>, Vec<usize>) =
                all.iter().partition(|&&c| ((c % nx) as f64 + 0.5) < limit);
            if right.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "split {split} leaves no prediction cells"
                )));
            }
            (uniform(&left, spec.n, &mut rng)?, right)
        }
    };
    Ok(Sample {
        train: world.grid.subset(&train_cells),
        domain: world.grid.subset(&domain_cells),
        train_cells,
        domain_cells,
    })
}

fn uniform(cells: &[usize], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if n > cells.len() {
        return Err(Error::TooFewPoints {
            needed: n,
            got: cells.len(),
        });
    }
    Ok(sample(rng, cells.len(), n)
        .into_iter()
        .map(|i| cells[i])
        .collect())
}

/// `n` distinct cells, each drawn by picking a centre and adding a rounded
/// Gaussian offset; draws outside the grid or on a taken cell are retried.
/// Centres are used round-robin, or picked at random when `random_centre`.
fn gaussian_children(
    world: &World,
    centres: &[usize],
    n: usize,
    sd: f64,
    taken: &mut HashSet<usize>,
    random_centre: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let (nx, ny) = (world.spec.nx as i64, world.spec.ny as i64);
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let max_tries = 1000 * n.max(1);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > max_tries {
            return Err(Error::InvalidParameter(format!(
                "could only place {} of {n} points around {} centres (sd {sd}); increase the spread",
                out.len(),
                centres.len()
            )));
        }
        let centre = if random_centre {
            centres[rng.random_range(0..centres.len())]
        } else {
            centres[out.len() % centres.len()]
        };
        let (cx, cy) = world.position(centre);
        let x = cx as i64 + normal.sample(rng).round() as i64;
        let y = cy as i64 + normal.sample(rng).round() as i64;
        if x < 0 || y < 0 || x >= nx || y >= ny {
            continue;
        }
        let cell = world.cell(x as usize, y as usize);
        if taken.insert(cell) {
            out.push(cell);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::world::{generate_world, WorldSpec};

    fn world() -> World {
        generate_world(&WorldSpec {
            nx: 40,
            ny: 30,
            p: 2,
            corr_length: 2,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn every_design_yields_distinct_cells() {
        let w = world();
        for design in [
            Design::Random,
            Design::biased(),
            Design::clustered(),
            Design::extrapolation(),
        ] {
            let s = sample_design(
                &w,
                &DesignSpec {
                    seed: 9,
                    ..DesignSpec::new(design, 60)
                },
            )
            .unwrap();
            assert_eq!(s.train.len(), 60);
            let unique: HashSet<_> = s.train_cells.iter().collect();
            assert_eq!(unique.len(), 60, "{design}");
            assert!(s.train.response().is_some());
        }
    }

    #[test]
    fn extrapolation_regions_do_not_overlap() {
        let w = world();
        let s = sample_design(&w, &DesignSpec::new(Design::extrapolation(), 50)).unwrap();
        assert!(s.train.coords().iter().all(|c| c[0] < 20.0));
        assert!(s.domain.coords().iter().all(|c| c[0] > 20.0));
        assert_eq!(s.domain.len(), 20 * 30);
    }

    #[test]
    fn infeasible_sizes() {
        let w = world();
        assert!(matches!(
            sample_design(&w, &DesignSpec::new(Design::Random, 1201)),
            Err(Error::TooFewPoints { .. })
        ));
        let tight = Design::Clustered {
            parents: 1,
            child_sd: 0.1,
        };
        assert!(sample_design(&w, &DesignSpec::new(tight, 50)).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let w = world();
        let spec = DesignSpec {
            seed: 3,
            ..DesignSpec::new(Design::clustered(), 40)
        };
        assert_eq!(
            sample_design(&w, &spec).unwrap().train_cells,
            sample_design(&w, &spec).unwrap().train_cells
        );
    }
}
