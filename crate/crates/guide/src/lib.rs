//! The book's code listings, compiled and run as doctests. One module per
//! chapter so a failing listing is easy to place.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}
#[doc = include_str!("../../../book/src/schedules.md")]
pub mod schedules {}
#[doc = include_str!("../../../book/src/optimisation.md")]
pub mod optimisation {}
#[doc = include_str!("../../../book/src/qaoa.md")]
pub mod qaoa {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
