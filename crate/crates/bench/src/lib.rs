pub use timebin;
