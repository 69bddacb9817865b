//! Quantifier elimination along scaffoldings, shrouds, censuses and subgraph restriction.

mod census;
mod elim;
mod shroud;
mod template;
mod uncount;

pub use census::{card_atoms, census, restrict_to_subgraph, Census, Restriction};
pub use elim::{
    eliminate_all, eliminate_all_with, shannon_cubes, ElimContext, ElimOptions, Elimination,
    ScaffoldSymbols, LOCAL_VAR,
};
pub use shroud::{compute_shroud, h_center, Shroud};
pub use template::{
    enumerate_templates, forced_match, forced_match_env, matches_template, realized_template,
    subterm_closure, Forest, Template, TemplateKey, DEFAULT_TEMPLATE_CAP,
};
pub use uncount::{counters_to_quantifiers, localize, Localized};
