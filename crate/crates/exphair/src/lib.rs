//! Hairs, itineraries and orbit dynamics of the exponential family `E_λ(z) = λe^z`.

#[cfg(feature = "cli")]
pub mod cli;
pub mod construct;
pub mod dynamics;
pub mod hair;
pub mod itinerary;
pub mod target;
pub mod xnum;
