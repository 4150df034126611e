use num_traits::{Float, FromPrimitive};

pub trait Prob: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {}

impl<T> Prob for T where T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display {}
