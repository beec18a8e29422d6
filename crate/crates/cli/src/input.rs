//! Loading and validating the inputs of `solve` and `check`.

use std::path::Path;

use problin::gaussian::{pushforward, GaussianBelief};
use problin::gmres::ata_inverse_prior;
use problin::linalg::mm::{read_matrix, read_vector};
use problin::linalg::random::{seeded_rng, standard_normal_matrix};
use problin::linalg::Cholesky;
use problin::sbi::SearchDirections;
use problin::Matrix;

use crate::args::{PriorKind, SystemArgs};
use crate::error::{CliError, CliResult};

fn load_matrix(flag: &'static str, path: &Path) -> CliResult<Matrix> {
    read_matrix(path).map_err(|e| CliError::config(flag, format!("{}: {e}", path.display())))
}

fn load_vector(flag: &'static str, path: &Path) -> CliResult<Vec<f64>> {
    read_vector(path).map_err(|e| CliError::config(flag, format!("{}: {e}", path.display())))
}

fn square_of(flag: &'static str, m: &Matrix, d: usize) -> CliResult<()> {
    if m.shape() != (d, d) {
        return Err(CliError::config(
            flag,
            format!("expected a {d}x{d} matrix, found {}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

/// `A x = b` together with the preconditioners; the solvers see
/// `P_l A P_r z = P_l b` and iterates are mapped back through `x = P_r z`.
pub struct System {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub pl: Option<Matrix>,
    pub pr: Option<Matrix>,
    /// Starting guess for the system actually solved.
    pub x0: Vec<f64>,
}

impl System {
    pub fn load(args: &SystemArgs) -> CliResult<Self> {
        let a = load_matrix("--matrix", &args.matrix)?;
        if !a.is_square() {
            return Err(CliError::config(
                "--matrix",
                format!("A must be square, found {}x{}", a.rows(), a.cols()),
            ));
        }
        let d = a.rows();
        let b = load_vector("--rhs", &args.rhs)?;
        if b.len() != d {
            return Err(CliError::config("--rhs", format!("length {} does not match d = {d}", b.len())));
        }
        if args.iterations > d {
            return Err(CliError::config(
                "--iterations",
                format!("{} exceeds the dimension d = {d}", args.iterations),
            ));
        }
        let x0 = match &args.x0 {
            Some(p) => {
                let x0 = load_vector("--x0", p)?;
                if x0.len() != d {
                    return Err(CliError::config("--x0", format!("length {} does not match d = {d}", x0.len())));
                }
                x0
            }
            None => vec![0.0; d],
        };
        let pl = match &args.precondition_left {
            Some(p) => Some(load_matrix("--precondition-left", p)?),
            None => None,
        };
        if let Some(p) = &pl {
            square_of("--precondition-left", p, d)?;
        }
        let pr = match &args.precondition_right {
            Some(p) => Some(load_matrix("--precondition-right", p)?),
            None => None,
        };
        if let Some(p) = &pr {
            square_of("--precondition-right", p, d)?;
        }
        Ok(Self { a, b, pl, pr, x0 })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn is_preconditioned(&self) -> bool {
        self.pl.is_some() || self.pr.is_some()
    }

    /// `P_l A P_r`.
    pub fn solved_matrix(&self) -> Matrix {
        let mut m = self.a.clone();
        if let Some(pl) = &self.pl {
            m = pl.matmul(&m);
        }
        if let Some(pr) = &self.pr {
            m = m.matmul(pr);
        }
        m
    }

    /// `P_l b`.
    pub fn solved_rhs(&self) -> Vec<f64> {
        match &self.pl {
            Some(pl) => pl.matvec(&self.b),
            None => self.b.clone(),
        }
    }

    /// Maps a belief over `z` to one over `x = P_r z`.
    pub fn to_x(&self, belief: &GaussianBelief) -> CliResult<GaussianBelief> {
        match &self.pr {
            Some(pr) => Ok(pushforward(belief, pr, &vec![0.0; self.dim()])?),
            None => Ok(belief.clone()),
        }
    }

    pub fn point_to_x(&self, z: &[f64]) -> Vec<f64> {
        match &self.pr {
            Some(pr) => pr.matvec(z),
            None => z.to_vec(),
        }
    }
}

/// The prior on the solution of `a z = …`, centred at `x0`.
pub fn build_prior(args: &SystemArgs, a: &Matrix, x0: &[f64]) -> CliResult<GaussianBelief> {
    let d = a.rows();
    match args.prior {
        PriorKind::Identity => Ok(GaussianBelief::new(x0.to_vec(), Matrix::identity(d))?),
        PriorKind::Inverse => {
            eprintln!("warning: --prior inverse forms a dense A⁻¹; use it for validation only");
            let chol = Cholesky::new(a)?;
            Ok(GaussianBelief::new(x0.to_vec(), chol.inverse().symmetrize())?)
        }
        PriorKind::AtaInverse => {
            eprintln!("warning: --prior ata-inverse forms a dense (AᵀA)⁻¹; use it for validation only");
            Ok(ata_inverse_prior(a, x0)?)
        }
        PriorKind::File => {
            let path = args
                .prior_file
                .as_ref()
                .ok_or_else(|| CliError::config("--prior-file", "required with --prior file"))?;
            let cov = load_matrix("--prior-file", path)?;
            square_of("--prior-file", &cov, d)?;
            GaussianBelief::new(x0.to_vec(), cov).map_err(|e| CliError::config("--prior-file", e.to_string()))
        }
    }
}

/// `m` directions from `--directions`, or standard normal ones drawn from `--seed`.
pub fn sbi_directions(args: &SystemArgs, d: usize, m: usize) -> CliResult<SearchDirections> {
    let s = match &args.directions {
        Some(p) => {
            let s = load_matrix("--directions", p)?;
            if s.rows() != d {
                return Err(CliError::config("--directions", format!("expected {d} rows, found {}", s.rows())));
            }
            if s.cols() < m {
                return Err(CliError::config(
                    "--iterations",
                    format!("{m} exceeds the {} columns of --directions", s.cols()),
                ));
            }
            s.leading_cols(m)
        }
        None => standard_normal_matrix(d, m, &mut seeded_rng(args.seed)),
    };
    SearchDirections::new(s).map_err(|e| CliError::config("--directions", e.to_string()))
}

pub fn parse_cg_prior(text: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::config("--cg-prior", format!("expected alpha,beta,gamma, found {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut v = [0.0f64; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| bad())?;
        if !slot.is_finite() {
            return Err(bad());
        }
    }
    Ok((v[0], v[1], v[2]))
}
