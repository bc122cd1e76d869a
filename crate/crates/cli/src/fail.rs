use std::fmt;

/// Why a command failed; decides the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, config or data. Exit code 1.
    Invalid(String),
    /// Filesystem trouble. Exit code 2.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<lesionkit::Error> for Failure {
    fn from(e: lesionkit::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

/// Attach a path to an error message.
pub fn at(path: &std::path::Path) -> impl Fn(lesionkit::Error) -> Failure + '_ {
    move |e| match Failure::from(e) {
        Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
        Failure::Io(m) => Failure::Io(format!("{}: {m}", path.display())),
    }
}
