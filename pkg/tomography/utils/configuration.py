from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level settings for the tomography toolkit.
    Algorithm parameters live in the models (ReconConfig, TVConfig, ...), not here.
    Refer https://docs.pydantic.dev/latest/concepts/pydantic_settings/ for more details.
    """

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8")

    LOG_LEVEL: str = "INFO"
    LOGGING_CONFIG: str = "logging.yaml"
    PROJECT_NAME: str = "Partial data EIT toolkit"
    PROJECT_VERSION: str = "1.0.0"
    CACHE_DIRECTORY: str = ".cache"
    MESH_CACHE_ENABLED: bool = True
    WORKER_CONCURRENCY_LIMIT: int = 4
    DEBUG: bool = False


configuration = Settings()
