//! Bootstrap percolation with general two-dimensional update families.

pub mod droplets;
pub mod family;
pub mod geometry;
pub mod lattice;
pub mod montecarlo;
pub mod oracle;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/closures.md")]
    mod closures {}
    #[doc = include_str!("../../../book/src/droplets.md")]
    mod droplets {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
