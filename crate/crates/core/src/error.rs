use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {n_theta}x{n_phi}: {reason}")]
    InvalidGrid {
        n_theta: usize,
        n_phi: usize,
        reason: &'static str,
    },

    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("field has {found} values, grid needs {expected}")]
    FieldLength { expected: usize, found: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("degenerate surface: radius {value:e} at node {node} is below the floor {floor:e}")]
    DegenerateSurface { node: usize, value: f64, floor: f64 },

    #[error("under-resolved surface at node {node}: {detail}")]
    Resolution { node: usize, detail: String },

    #[error("surface is not mean-convex: H = {h:e} at node {node}")]
    MeanConvexity { node: usize, h: f64 },

    #[error("principal curvatures {kappa:?} at node {node} leave the cone of speed {speed}")]
    CurvatureCone {
        node: usize,
        kappa: Vec<f64>,
        speed: String,
    },

    #[error("integral of sigma_{k} is {value:e}; quotient needs positive integrals")]
    ConvexityClass { k: usize, value: f64 },

    #[error("index k = {k} outside the admissible range {range}")]
    OrderOutOfRange { k: usize, range: String },

    #[error("conformal flow blew up: {detail}")]
    FlowBlowUp { detail: String },

    #[error("mapped surface is not star-shaped about the origin along direction {node}: {detail}")]
    NotStarShaped { node: usize, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in structured CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid { .. } => "invalid_grid",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::FieldLength { .. } => "field_length",
            Error::NonFinite { .. } => "non_finite",
            Error::DegenerateSurface { .. } => "degenerate_surface",
            Error::Resolution { .. } => "resolution",
            Error::MeanConvexity { .. } => "mean_convexity",
            Error::CurvatureCone { .. } => "curvature_cone",
            Error::ConvexityClass { .. } => "convexity_class",
            Error::OrderOutOfRange { .. } => "order_out_of_range",
            Error::FlowBlowUp { .. } => "flow_blow_up",
            Error::NotStarShaped { .. } => "not_star_shaped",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
