//! Datasets: the synthetic severe-slugging generator, well-test CSV
//! ingestion with flow-period segmentation, and frame/plot persistence.

pub mod csv_io;
pub mod slugging;

pub use csv_io::{load_frame_csv, write_frame_csv, write_plot_data};
pub use slugging::{generate_slugging, SlugGenParams};
pub use well_test::{
    generate_well_test, load_well_test_csv, load_well_test_records, records_to_frame,
    WellTestFixtureParams, WellTestRecord,
};
