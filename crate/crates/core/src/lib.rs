pub mod codescan;
pub mod contracts;
pub mod digest;
pub mod ledger;
pub mod licensing;
pub mod registry;
pub mod service;
