//! Speaker-verification back end: UBM, statistics, i-vectors, LDA, normalization and PLDA.

pub mod gmm;
pub mod io;
pub mod ivector;
pub mod lda;
pub mod normalize;
pub mod plda;
pub mod stats;

pub use gmm::{global_moments, train_ubm, GmmModel, UbmTrace, VARIANCE_FLOOR_FRACTION};
pub use io::{load_backend, load_extractor, load_ubm, save_backend, save_extractor, save_ubm, vectors_from_archive, vectors_to_archive, Backend};
pub use ivector::{train_tmatrix, IVectorExtractor, Posterior};
pub use lda::{scatter_matrices, train_lda, LdaTransform};
pub use normalize::{length_normalize, VectorNormalizer};
pub use plda::{plda_score, train_plda, PldaModel, PldaScorer, PldaTrace};
pub use stats::{bw_stats, BwStats};
