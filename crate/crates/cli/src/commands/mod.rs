pub mod components;
pub mod ensemble;
pub mod eval;
pub mod infer;
pub mod loss;
pub mod mask_small;
pub mod postprocess;
pub mod preprocess;

use lesionkit::Connectivity;

/// Clap parser for `6`, `18` or `26`.
pub(crate) fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    let n: u8 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    Connectivity::try_from(n).map_err(|e| e.to_string())
}
