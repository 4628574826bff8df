pub mod capacity;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod fractal;
pub mod maps;
pub mod space;
pub mod spatial;
pub mod verify;

pub use error::{Error, Result};
pub use maps::{MapDescriptor, MapFamily};
pub use space::{chordal_distance, ExtendedPoint, SpherePoint};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/space.md")]
    mod space {}
    #[doc = include_str!("../../../book/src/maps.md")]
    mod maps {}
    #[doc = include_str!("../../../book/src/julia.md")]
    mod julia {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/dimension.md")]
    mod dimension {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
