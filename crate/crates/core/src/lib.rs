//! Epistemic model checking for straightline multi-agent programs under
//! synchronous perfect recall.
//!
//! A script is parsed and resolved ([`script`]), unfolded into a DAG of
//! indexed variables ([`unfold`]), reduced by a d-separation relevance
//! analysis and leaf elimination ([`structured`]), and finally evaluated
//! with reduced ordered BDDs ([`bdd`], [`checker`]). An explicit-state
//! interpreter ([`semantics`]) and the semantic reference layer
//! ([`epistemic`], [`relational`]) serve as independent oracles.

pub mod bdd;
pub mod bench;
pub mod checker;
pub mod epistemic;
pub mod logic;
pub mod relational;
pub mod script;
pub mod semantics;
pub mod structured;
pub mod unfold;
