use crate::model::{bernoulli, uniform, Model};

/// `p ~ Uniform(0, 1)`, `y ~ Bernoulli(p)`.
pub fn coin_flip() -> Model<bool> {
    uniform(0.0, 1.0, "p").bind(|p| bernoulli(p, "y"))
}
