from fastapi import FastAPI

from app.routes.nef import router as nef_router

app = FastAPI(title="Nef Multiple Mirror API", version="1.0.0")
app.include_router(nef_router)


@app.get("/health")
def health_check():
    return {"status": "ok"}
