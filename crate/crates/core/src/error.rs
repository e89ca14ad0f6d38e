use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported wav encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("expected mono audio, found {0} channels")]
    ChannelCount(u16),
    #[error("truncated or malformed wav file: {0}")]
    TruncatedWav(String),

    #[error("empty signal")]
    EmptySignal,
    #[error("invalid frame geometry: {0}")]
    Geometry(String),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("invalid room: {0}")]
    Room(String),
    #[error("frequency {freq} Hz aliases at sample rate {sample_rate} Hz")]
    Aliasing { freq: f64, sample_rate: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("noise has zero energy in speech frames")]
    ZeroNoiseEnergy,
    #[error("no speech frames in voice activity mask")]
    NoSpeech,

    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("all frames dropped from utterance {0}")]
    EmptyUtterance(String),
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("zero vector after centering")]
    ZeroVector,
    #[error("both target and nontarget trials are required")]
    SingleClass,
    #[error("missing i-vector for {0}")]
    MissingId(String),
    #[error("duplicate trial {0} {1}")]
    DuplicateTrial(String, String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("bad model file: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stale input: {0}")]
    StaleManifest(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
