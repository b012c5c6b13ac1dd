//! Fourier-side reducibility: invariant sections, homological equations,
//! the nilpotent normal form at gap edges, averaging and gap certificates.

pub mod averaging;
pub mod certificate;
pub mod edges;
pub mod fourier;
pub mod homological;
pub mod normal_form;
pub mod section;

pub use averaging::{
    averaging_first_order, averaging_report, eps_m, log_first_order, p_tilde_from_r, perturbation_defect,
    perturbed_cocycle, r_moments, AveragingOptions, AveragingReport, AveragingStep, Moments,
};
pub use certificate::{
    certify_gap, classify, gap_certificate, measure_gap, rho_check, CertOptions, CertStatus, GapCertificate, RhoCheck,
};
pub use edges::{scan_zeros, section_edge_near, section_gap, section_pair, EdgeSearch, SectionZero};
pub use fourier::{fourier_truncate, FourierSeries};
pub use homological::{homological_solve, HomologicalSolution};
pub use section::{invariant_section, section_singulars, twisted_matrix, Section, SectionOptions};
pub use normal_form::{
    abar_fn, degree, eval_matrix, golden_min, normal_form_at_edge, normal_form_at_energy, normal_form_of, polish_edge,
    select_branch, sigma_min, upper_edge_window, Branch, FourierMatrix, NormalFormOptions, NormalFormResult,
    PolishedEdge, ThetaTilde,
};
