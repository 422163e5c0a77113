//! Test-case design generation from SRS documents: ingestion, chained LLM
//! prompting with record/replay, union-until-fixpoint canonicalization,
//! redundancy analysis and the developer review workflow.

pub mod case;
pub mod corpus;
pub mod llm;
pub mod prompt;
pub mod redundancy;
pub mod review;
pub mod suite;
pub mod synth;

pub use case::{Provenance, TestCaseDesign};
pub use corpus::{parse_srs, srs_stats, CorpusError, SrsDocument, StatsRecord, UseCase};
pub use llm::{ChatMessage, ChatSession, Gateway, GatewayError, Mode, ProviderConfig};
pub use redundancy::{align_redundancies, AlignmentReport, FlagStore, RedundancyFlag};
pub use review::{Category, MetricsReport, ProjectMetrics, ProjectStore, ReviewVerdict};
pub use suite::{fixpoint_generate, Approach, EquivalenceConfig, FixpointConfig, SuiteUnion};
