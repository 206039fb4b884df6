pub mod evaluate;
pub mod fit_stats;
pub mod phantom;
pub mod synthesize;
pub mod turing_export;
