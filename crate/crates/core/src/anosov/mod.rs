//! Perturbed automorphisms f = L + R: inverse, cone verification and
//! periodic data.

pub mod cone;
pub mod map;
pub mod periodic;

pub use cone::{verify_anosov, AnosovReport};
pub use map::{torus_distance, wrap, InverseMap, PerturbedMap, SmallnessReport, TorusMap};
pub use periodic::{periodic_data_check, periodic_points, PeriodicDataReport, PeriodicOrbit, PeriodicSearch, Similarity};
