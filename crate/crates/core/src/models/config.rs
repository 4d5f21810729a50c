//! Architecture hyperparameters shared by all four networks.

/// Filter counts, embedding sizes, and class count. The defaults are the
/// values every model in this crate is built and validated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchitectureConfig {
    /// Filters in the three depth perception convolutions.
    pub f1: usize,
    pub f2: usize,
    pub f3: usize,
    /// Hidden width of the steering control stacks.
    pub f4: usize,
    /// Semantic embedding length D.
    pub embedding: usize,
    /// Conditional vector length S.
    pub conditional: usize,
    /// Semantic classes K.
    pub classes: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            f1: 5,
            f2: 5,
            f3: 5,
            f4: 10,
            embedding: 64,
            conditional: 1,
            classes: 4,
        }
    }
}

impl ArchitectureConfig {
    /// Length of the fused vector F = depth features ++ embedding.
    pub fn fused_len(&self) -> usize {
        self.f3 + self.embedding
    }

    /// Control input length for the conditional fusion model.
    pub fn conditional_control_len(&self) -> usize {
        self.fused_len() + self.conditional
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fused_lengths() {
        let cfg = ArchitectureConfig::default();
        assert_eq!(cfg.fused_len(), 69);
        assert_eq!(cfg.conditional_control_len(), 70);
    }
}
