//! Model resolution shared by the subcommands: a stencil comes either from
//! a named family (`kg`, `powerlaw`), or from a stencil JSON file.

use clap::Args;
use harmlat::lattice::CouplingStencil;

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model family: "kg" (nearest-neighbor chain), "powerlaw"
    /// (1/n^alpha coupling with H = V (+) 1), or "file".
    #[arg(long, default_value = "kg")]
    pub model: String,

    /// Coupling of the kg model, in [-1, 1].
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Power-law exponent (alpha > 1).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Power-law coupling magnitude.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,

    /// Sign of the power-law coupling (+1 or -1).
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<f64>,

    /// On-site value of the power-law model; defaults to the critical one.
    #[arg(long)]
    pub onsite: Option<f64>,

    /// Stencil JSON file (with --model file).
    #[arg(long)]
    pub stencil: Option<std::path::PathBuf>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<CouplingStencil, String> {
        match self.model.as_str() {
            "kg" => {
                let kappa = self.kappa.ok_or("--kappa is required for the kg model")?;
                harmlat::klein_gordon(kappa).map_err(|e| format!("{}: {e}", e.name()))
            }
            "powerlaw" => {
                let alpha = self.alpha.ok_or("--alpha is required for the powerlaw model")?;
                let sign = self.sign.unwrap_or(1.0).signum();
                harmlat::power_law(alpha, sign * self.c.abs(), 1, self.onsite)
                    .map_err(|e| format!("{}: {e}", e.name()))
            }
            "file" => {
                let path = self.stencil.as_ref().ok_or("--stencil is required with --model file")?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                CouplingStencil::from_json(&text).map_err(|e| format!("{}: {e}", e.name()))
            }
            other => Err(format!("unknown model '{other}' (expected kg, powerlaw, or file)")),
        }
    }
}
