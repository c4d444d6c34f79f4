use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("data validation failed ({} problem rows):\n{}", .0.len(), .0.join("\n"))]
    Validation(Vec<String>),

    #[error("schema version mismatch: file declares {found}, expected {expected}")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error("config error: {0}")]
    Config(String),

    #[error("empty menu for student {0}")]
    EmptyMenu(String),

    #[error("no distance for geocode {geocode} x school {school} and haversine fallback is disabled")]
    MissingDistance { geocode: u32, school: String },

    #[error("perfect separation suspected: |{name}| = {value:.1} exceeds 50 after convergence")]
    Separation { name: String, value: f64 },

    #[error("optimizer did not converge after {iters} iterations (gradient norm {grad_norm:.3e})")]
    NoConvergence { iters: usize, grad_norm: f64 },

    #[error("singular Hessian at the optimum (smallest eigenvalue {0:.3e})")]
    SingularHessian(f64),

    #[error("duplicate lottery number {lottery} at program {program} (priority level {level})")]
    DuplicateLottery { program: String, level: u8, lottery: f64 },

    #[error("chain diverged: log-likelihood non-finite for {0} consecutive iterations")]
    Divergence(u64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("in simulation {index}: {source}")]
    Simulation { index: usize, source: Box<Error> },

    #[error("sampling kernel: {0}")]
    Kernel(#[from] mcmc_kernels::KernelError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(rows: Vec<String>) -> Self {
        Error::Validation(rows)
    }

    pub fn in_simulation(self, index: usize) -> Self {
        Error::Simulation { index, source: Box::new(self) }
    }
}
