//! Marginal-sample selection.
//!
//! The pool is augmented with each proposal's cosine similarity to the query,
//! projected by PCA, and scored with a Gaussian KDE. Proposals whose density
//! falls in the band `[r_l f*, r_u f*]` below the mode `f*` are the marginal
//! candidates; k-means over them picks one representative per cluster. After
//! labeling, SMOTE rebalances the shots when the classes are too skewed.

mod config;
mod smote;

pub use config::{ClassifierConfig, ClassifierKind, FlameConfig, KernelChoice};
pub use smote::smote;

use serde::{Deserialize, Serialize};

use crate::error::{BandDiagnostics, FlameError, Result};
use crate::numerics::{
    common_dim, cosine_similarity, fit_pca, kmeans, nearest_to_centers, scott_bandwidth,
    squared_distance, KdeModel,
};

/// A pool vector with its query similarity appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedEmbedding {
    augmented: Vec<f64>,
}

impl AugmentedEmbedding {
    pub fn new(base: &[f64], query: &[f64]) -> Result<Self> {
        let c = cosine_similarity(base, query)?;
        let mut augmented = Vec::with_capacity(base.len() + 1);
        augmented.extend_from_slice(base);
        augmented.push(c);
        Ok(AugmentedEmbedding { augmented })
    }

    pub fn base(&self) -> &[f64] {
        &self.augmented[..self.augmented.len() - 1]
    }

    pub fn similarity(&self) -> f64 {
        self.augmented[self.augmented.len() - 1]
    }

    /// `[x, c]`, one entry longer than the base vector.
    pub fn augmented(&self) -> &[f64] {
        &self.augmented
    }
}

impl AsRef<[f64]> for AugmentedEmbedding {
    fn as_ref(&self) -> &[f64] {
        &self.augmented
    }
}

/// Appends `cos(x_i, t)` to every pool vector, preserving order.
pub fn augment_pool<P: AsRef<[f64]>>(pool: &[P], query: &[f64]) -> Result<Vec<AugmentedEmbedding>> {
    if pool.is_empty() {
        return Err(FlameError::EmptyPool);
    }
    pool.iter()
        .map(|x| AugmentedEmbedding::new(x.as_ref(), query))
        .collect()
}

/// Density level band below the KDE mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalBand {
    pub mode_density: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub bandwidth: f64,
    /// Indices into the projections, ascending.
    pub members: Vec<usize>,
    /// KDE density at every projection.
    pub densities: Vec<f64>,
}

/// Fits a KDE on the projections and keeps every index whose density lies in
/// `[r_l f*, r_u f*]`, where `f*` is the density at the sample-restricted mode.
pub fn marginal_band(projections: &[Vec<f64>], config: &FlameConfig) -> Result<MarginalBand> {
    common_dim(projections)?;
    let bandwidth = match config.bandwidth {
        Some(h) => h,
        None => scott_bandwidth(projections)?,
    };
    let kde = KdeModel::fit(projections.to_vec(), bandwidth)?;
    let densities = kde.sample_densities();
    let mode_density = densities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower_threshold = config.ratio_lower * mode_density;
    let upper_threshold = config.ratio_upper * mode_density;
    let members: Vec<usize> = densities
        .iter()
        .enumerate()
        .filter(|(_, &f)| lower_threshold <= f && f <= upper_threshold)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(FlameError::EmptyBand(BandDiagnostics {
            mode_density,
            min_density: densities.iter().copied().fold(f64::INFINITY, f64::min),
            max_density: mode_density,
            lower_threshold,
            upper_threshold,
        }));
    }
    Ok(MarginalBand {
        mode_density,
        lower_threshold,
        upper_threshold,
        bandwidth,
        members,
        densities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub pool_index: usize,
    pub cluster_id: usize,
    pub density: f64,
    pub distance_to_center: f64,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub mode_density: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub bandwidth: f64,
    pub member_count: usize,
}

/// The shots chosen for annotation, ordered by cluster id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSelection {
    pub shots: Vec<Shot>,
    pub requested_k: usize,
    pub effective_k: usize,
    pub band: BandSummary,
    /// Pool indices of every band member, ascending.
    pub band_members: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ShotSelection {
    pub fn pool_indices(&self) -> Vec<usize> {
        self.shots.iter().map(|s| s.pool_index).collect()
    }
}

/// Runs projection, marginal filtering and k-means diversity selection.
///
/// When fewer than `K` proposals fall in the band, `K` shrinks to the band size
/// and a warning is recorded on the selection.
pub fn select_shots(pool: &[AugmentedEmbedding], config: &FlameConfig) -> Result<ShotSelection> {
    config.validate()?;
    if pool.is_empty() {
        return Err(FlameError::EmptyPool);
    }
    common_dim(pool)?;

    let candidates: Vec<usize> = match config.similarity_floor {
        Some(floor) => (0..pool.len())
            .filter(|&i| pool[i].similarity() >= floor)
            .collect(),
        None => (0..pool.len()).collect(),
    };
    if candidates.len() < config.shots {
        return Err(FlameError::InsufficientSamples {
            requested: config.shots,
            available: candidates.len(),
        });
    }
    let vectors: Vec<&[f64]> = candidates.iter().map(|&i| pool[i].augmented()).collect();

    let pca = fit_pca(&vectors, config.pca_dim)?;
    let projections = pca.project_all(&vectors)?;
    let band = marginal_band(&projections, config)?;

    let mut warnings = Vec::new();
    let effective_k = config.shots.min(band.members.len());
    if effective_k < config.shots {
        let msg = format!(
            "marginal band holds {} proposals, fewer than the requested {} shots; selecting {}",
            band.members.len(),
            config.shots,
            effective_k
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let member_vectors: Vec<&[f64]> = band.members.iter().map(|&m| vectors[m]).collect();
    let clustering = kmeans(&member_vectors, effective_k, config.seed)?;
    let nearest = nearest_to_centers(&clustering, &member_vectors);

    let shots = nearest
        .iter()
        .enumerate()
        .map(|(cluster_id, &m)| {
            let local = band.members[m];
            let pool_index = candidates[local];
            Shot {
                pool_index,
                cluster_id,
                density: band.densities[local],
                distance_to_center: squared_distance(
                    member_vectors[m],
                    &clustering.centers[cluster_id],
                )
                .sqrt(),
                similarity: pool[pool_index].similarity(),
            }
        })
        .collect();

    Ok(ShotSelection {
        shots,
        requested_k: config.shots,
        effective_k,
        band: BandSummary {
            mode_density: band.mode_density,
            lower_threshold: band.lower_threshold,
            upper_threshold: band.upper_threshold,
            bandwidth: band.bandwidth,
            member_count: band.members.len(),
        },
        band_members: band.members.iter().map(|&m| candidates[m]).collect(),
        warnings,
    })
}

/// A shot with its binary label; synthetic shots come from SMOTE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledShot {
    pub pool_index: Option<usize>,
    pub augmented: Vec<f64>,
    pub label: bool,
    pub synthetic: bool,
}

impl LabeledShot {
    pub fn real(pool_index: usize, augmented: Vec<f64>, label: bool) -> Self {
        LabeledShot {
            pool_index: Some(pool_index),
            augmented,
            label,
            synthetic: false,
        }
    }

    pub fn synthetic(augmented: Vec<f64>, label: bool) -> Self {
        LabeledShot {
            pool_index: None,
            augmented,
            label,
            synthetic: true,
        }
    }
}

/// `max class count / min class count`.
pub fn imbalance_ratio(labels: &[bool]) -> Result<f64> {
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FlameError::SingleClass {
            present: if positives == 0 {
                "negative".into()
            } else {
                "positive".into()
            },
        });
    }
    Ok(positives.max(negatives) as f64 / positives.min(negatives) as f64)
}

/// Returns the labeled shots, extended with SMOTE synthetics that equalize the
/// class counts when the imbalance ratio exceeds the configured threshold.
pub fn build_training_set(
    labeled: &[LabeledShot],
    config: &FlameConfig,
) -> Result<Vec<LabeledShot>> {
    let labels: Vec<bool> = labeled.iter().map(|s| s.label).collect();
    let rho = imbalance_ratio(&labels)?;
    let mut out = labeled.to_vec();
    if rho > config.imbalance_threshold {
        let positives = labels.iter().filter(|&&l| l).count();
        let negatives = labels.len() - positives;
        let deficit = positives.max(negatives) - positives.min(negatives);
        out.extend(smote(
            labeled,
            config.smote_neighbors,
            deficit,
            config.jitter_sigma,
            config.seed,
        )?);
    }
    Ok(out)
}
