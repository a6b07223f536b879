//! Evidential clustering and its explanation by decision trees.
//!
//! A [`CredalPartition`] assigns every observation a mass function over a
//! frame of clusters. [`iemm_fit`] grows an axis-aligned tree with one leaf
//! per focal set by greedily minimizing λ-mistakeness, and [`explain`] turns
//! such trees into rule explanations and representativeness reports.
//!
//! ```
//! use credex::{ecm_fit, iemm_fit, synth_generate, EcmConfig, IemmConfig, Lambda, Preset};
//!
//! let data = synth_generate(&Preset::Easy.config(1)).unwrap();
//! let fit = ecm_fit(&data, &EcmConfig::new(2)).unwrap();
//! let tree = iemm_fit(&data, &fit.partition, &fit.centroids, &IemmConfig::new(Lambda::INFINITY)).unwrap();
//! assert_eq!(tree.leaf_count(), 3);
//! ```

pub mod belief;
pub mod ecm;
pub mod explain;
pub mod iemm;
pub mod mistakeness;
pub mod oracle;
pub mod partition;
pub mod utility;

pub use belief::{BeliefError, Frame, MassFunction, Subset};
pub use ecm::{ecm_fit, synth_generate, EcmConfig, EcmError, EcmFit, FocalPolicy, Preset, SynthConfig};
pub use explain::{
    check_representative, representativeness_matrix, tree_to_dnf, DnfExplanation, ExplainError, RepresentativenessReport,
};
pub use iemm::{iemm_fit, tree_total_mistakeness, ExplainerTree, IemmConfig, IemmError};
pub use mistakeness::{Mistakeness, MistakenessError, MistakenessMode, NodeView};
pub use partition::{CentroidSet, CredalPartition, Dataset, HardClustering, PartitionBundle, PartitionError};
pub use utility::{Lambda, Utility, UtilityError, UtilitySpec};
