pub mod complete;
pub mod denoise;
pub mod descriptors;
pub mod eval;
pub mod gen_holes;

/// Options every command sees.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    /// Overrides the configured seed when given.
    pub seed: Option<u64>,
}
