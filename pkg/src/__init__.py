# Binary latent ranking package