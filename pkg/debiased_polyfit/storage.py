"""
MongoDB store for experiment runs and their trial records.

Documents are keyed by deterministic string ids: a run is identified by the
SHA-256 of its configuration, a trial by ``run/method/d/n/trial``. Saving the
same run twice overwrites it.
"""

import hashlib
import logging
from typing import (
    Any,
    Dict,
    Generic,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Type,
    TypeVar,
)

from pydantic import BaseModel
from pymongo import ASCENDING, ReplaceOne
from pymongo.collection import Collection
from pymongo.database import Database

from .errors import DebiasedPolyfitError
from .experiments import ExperimentConfig, TrialRecord

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)
Sort = Sequence[Tuple[str, int]]


class AbstractRepository(Generic[T]):
    class Meta:
        collection_name: str

    def __init__(self, database: Database):
        super().__init__()
        self.__database: Database = database
        self.__document_class: Type[T] = (
            getattr(self.Meta, "document_class")
            if hasattr(self.Meta, "document_class")
            else self.__orig_bases__[0].__args__[0]  # type: ignore
        )
        self.__collection_name = self.Meta.collection_name
        self.__validate()

    def get_collection(self) -> Collection:
        return self.__database[self.__collection_name]

    def __validate(self):
        if "id" not in self.__document_class.model_fields:
            raise DebiasedPolyfitError("Document class should have id field")
        if not self.__collection_name:
            raise DebiasedPolyfitError("Meta should contain collection name")

    def document_id(self, model: T) -> str:
        raise NotImplementedError

    def to_document(self, model: T) -> dict:
        """
        Convert model to a BSON-ready document. Arrays become plain lists.
        """
        data = model.model_dump(mode="json")
        data.pop("id")
        data["_id"] = getattr(model, "id")
        return data

    def to_model(self, data: dict) -> T:
        data_copy = data.copy()
        if "_id" in data_copy:
            data_copy["id"] = data_copy.pop("_id")
        return self.__document_class.model_validate(data_copy)

    def __map_id(self, data: dict) -> dict:
        query = data.copy()
        if "id" in data:
            query["_id"] = query.pop("id")
        return query

    def __assign_id(self, model: T) -> None:
        if not getattr(model, "id"):
            setattr(model, "id", self.document_id(model))

    def save(self, model: T):
        """
        Insert or replace the entity under its id.
        """
        self.__assign_id(model)
        document = self.to_document(model)
        return self.get_collection().replace_one(
            {"_id": document["_id"]}, document, upsert=True
        )

    def save_many(self, models: Iterable[T]) -> int:
        operations = []
        for model in models:
            self.__assign_id(model)
            document = self.to_document(model)
            operations.append(
                ReplaceOne({"_id": document["_id"]}, document, upsert=True)
            )
        if operations:
            self.get_collection().bulk_write(operations)
        return len(operations)

    def delete_by(self, query: dict) -> int:
        return self.get_collection().delete_many(self.__map_id(query)).deleted_count

    def find_one_by_id(self, _id: str) -> Optional[T]:
        return self.find_one_by({"id": _id})

    def find_one_by(self, query: dict) -> Optional[T]:
        result = self.get_collection().find_one(self.__map_id(query))
        return self.to_model(result) if result else None

    def find_by(
        self,
        query: dict,
        sort: Optional[Sort] = None,
        limit: Optional[int] = None,
    ) -> Iterable[T]:
        cursor = self.get_collection().find(self.__map_id(query))
        if sort:
            cursor.sort([("_id" if key == "id" else key, order) for key, order in sort])
        if limit:
            cursor.limit(limit)
        return map(self.to_model, cursor)


def run_id(config: ExperimentConfig) -> str:
    # the worker count does not change the results
    payload = config.model_dump_json(exclude={"workers"})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ExperimentRun(BaseModel):
    id: Optional[str] = None
    kind: str
    config: ExperimentConfig
    summary: List[Dict[str, Any]] = []


class ExperimentRunRepository(AbstractRepository[ExperimentRun]):
    class Meta:
        collection_name = "experiment_runs"

    def document_id(self, model: ExperimentRun) -> str:
        return run_id(model.config)


class TrialRecordRepository(AbstractRepository[TrialRecord]):
    class Meta:
        collection_name = "trial_records"

    def document_id(self, model: TrialRecord) -> str:
        if not model.run_id:
            raise DebiasedPolyfitError("trial record needs a run id")
        keys = (model.method.value, model.d, model.n, model.trial)
        return "/".join([model.run_id, *(str(key) for key in keys)])

    def find_by_run(self, run_id: str) -> List[TrialRecord]:
        return list(
            self.find_by(
                {"run_id": run_id},
                sort=[(key, ASCENDING) for key in ("method", "d", "n", "trial")],
            )
        )


def store_run(
    database: Database,
    kind: str,
    config: ExperimentConfig,
    records: Sequence[TrialRecord],
    summary: Sequence[Dict[str, Any]] = (),
) -> str:
    """
    Save a run and its trial records, replacing any earlier copy of the same
    run. Returns the run id.
    """
    run = ExperimentRun(kind=kind, config=config, summary=list(summary))
    ExperimentRunRepository(database).save(run)
    assert run.id is not None
    trials = TrialRecordRepository(database)
    trials.delete_by({"run_id": run.id})
    stored = trials.save_many(
        record.model_copy(update={"id": None, "run_id": run.id}) for record in records
    )
    logger.info("stored run %s with %d trial records", run.id, stored)
    return run.id
