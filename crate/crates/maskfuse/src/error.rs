use std::path::PathBuf;

/// Errors raised by IO, file formats, and pipeline orchestration.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("file not found: {}", path.display())]
    FileMissing { path: PathBuf },
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to decode {}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("failed to encode {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{}: unsupported pixel format ({detail}); expected 8-bit gray, RGB, or RGBA", path.display())]
    UnsupportedPixelFormat { path: PathBuf, detail: String },
    #[error("{}: truth image must be 8-bit gray with every pixel 0 or 255", path.display())]
    NotBinaryTruth { path: PathBuf },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: maskfuse_core::Error,
    },
    #[error("failed to parse {}: {source}", path.display())]
    ConfigParse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("failed to serialize document: {0}")]
    TomlSerialize(#[from] toml::ser::Error),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    pub(crate) fn core(context: impl Into<String>, source: maskfuse_core::Error) -> Self {
        PipelineError::Core {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            PipelineError::FileMissing { path }
        } else {
            PipelineError::Io { path, source }
        }
    }
}
