//! Holds the `acceptance` test target; run it with `cargo test -p chainscope-verify --test acceptance`.
