pub use graspbench;
