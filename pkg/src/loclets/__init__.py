"""Localized spectral graph wavelets: filtering, spectrum estimation and denoising."""
