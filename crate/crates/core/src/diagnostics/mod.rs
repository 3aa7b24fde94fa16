//! Energy-law bookkeeping, a-priori energies, the species estimate, twin
//! divergence and conserved quantities, plus the CSV record format.

mod apriori;
mod energy;
mod record;
mod twin;
mod xi;

pub use apriori::{apriori_e, apriori_z, correction_at, correction_r, AprioriEnergy, CorrectionTensor, NodeJet};
pub use energy::{
    dissipation_rate, dissipation_routes, energy_e0, energy_e0_doubled, energy_eps, energy_law_residual,
};
pub use record::{read_csv, write_csv, CsvSink, DiagnosticsRecord, CSV_HEADER};
pub(crate) use record::{record_dynamic, record_quasi};
pub use twin::{invariants_snapshot, twin_divergence, Invariants};
pub use xi::{elliptic_regularity_ratio, xi_accumulate, XiAccumulator};
