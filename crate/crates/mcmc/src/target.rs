/// An unnormalized log-density over `R^dim`, optionally with gradient.
///
/// Implementations may return `-inf` (impossible region) or NaN from
/// `log_density`; kernels treat NaN like `-inf` and reject the proposal.
pub trait Target {
    fn dim(&self) -> usize;

    /// Log of the unnormalized density at `x`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Gradient of the log-density, when available. Kernels that need it
    /// (HMC) reject the step with a divergence flag if any component is
    /// non-finite.
    fn grad_log_density(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Adapter building a [`Target`] from closures; handy in tests and for
/// conditional densities inside Gibbs sweeps.
pub struct FnTarget<F, G = fn(&[f64]) -> Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    dim: usize,
    logp: F,
    grad: Option<G>,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64]) -> f64,
{
    pub fn new(dim: usize, logp: F) -> Self {
        FnTarget { dim, logp, grad: None }
    }
}

impl<F, G> FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    pub fn with_grad(dim: usize, logp: F, grad: G) -> Self {
        FnTarget { dim, logp, grad: Some(grad) }
    }
}

impl<F, G> Target for FnTarget<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.logp)(x)
    }

    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }
}
