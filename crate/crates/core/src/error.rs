use thiserror::Error;

use crate::basis::ElementKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "{given} quadrature points per direction cannot integrate order {order} exactly; need at least {required}"
    )]
    QuadratureTooSmall {
        order: usize,
        given: usize,
        required: usize,
    },

    #[error("lattice needs at least 2 quadrature points per direction, got {0}")]
    LatticeTooSmall(usize),

    #[error("point {point:?} lies outside the {kind:?} reference element")]
    OutsideElement { kind: ElementKind, point: [f64; 3] },

    #[error("coefficient vector has length {found}, basis dimension is {expected}")]
    CoefficientLength { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("solution became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("element {element} is not an affine image of its reference element")]
    NonAffine { element: usize },

    #[error("element {element} has non-positive Jacobian determinant")]
    InvertedElement { element: usize },

    #[error("face {face} of element {element} has no conforming partner")]
    NonConformingFace { element: usize, face: usize },

    #[error("{kind:?} elements are not supported by {context}")]
    UnsupportedElement { kind: ElementKind, context: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenSolver,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
