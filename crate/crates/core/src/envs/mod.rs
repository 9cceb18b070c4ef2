//! Concrete environments.

pub mod exercise;
pub mod style;
pub mod toy;

pub use exercise::{ExerciseEnv, ExerciseEnvConfig, ReducedExercise, UserProfile};
pub use style::{StyleEnv, StyleEnvConfig};
pub use toy::ToyPomdp;
