use std::path::{Path, PathBuf};

use speechcmd_core::augment::AugmentError;
use speechcmd_core::dataset::DatasetError;
use speechcmd_core::dsp::DspError;
use speechcmd_core::eval::EvalError;
use speechcmd_core::nn::NnError;
use speechcmd_core::wav_io::WavError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Wav { path: String, source: WavError },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{what}: {message}")]
    Format { what: &'static str, message: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("no wav files found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("prediction files disagree: {0}")]
    MismatchedPredictionFiles(String),
    #[error("training failed: {0}")]
    Train(String),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable snake_case identifier for the error line printed by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Wav { .. } => "wav",
            Error::Dsp(_) => "dsp",
            Error::Augment(_) => "augment",
            Error::Dataset(_) => "dataset",
            Error::Nn(_) => "nn",
            Error::Eval(_) => "eval",
            Error::Format { .. } => "format",
            Error::Csv { .. } => "csv",
            Error::Config { .. } => "config",
            Error::EmptyCorpus(_) => "empty_corpus",
            Error::MismatchedPredictionFiles(_) => "mismatched_prediction_files",
            Error::Train(_) => "train",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }

    pub(crate) fn format(what: &'static str, message: impl Into<String>) -> Self {
        Error::Format { what, message: message.into() }
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }
}
