//! Empty library; the acceptance runs live in `tests/acceptance.rs`.
